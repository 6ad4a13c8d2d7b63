#pragma once

#include <string>

namespace ddimlab {

struct CmdOptions {
  std::string out_dir = "out";
  int workers = 1;
  bool timestamp = true;  // --no-timestamp clears this for byte-stable SVGs
};

void cmd_train(const std::string& config_text, const CmdOptions& opt);
void cmd_generate(const std::string& config_text, const CmdOptions& opt);
void cmd_gravmap(const std::string& config_text, const CmdOptions& opt);
void cmd_embed_gd(const std::string& config_text, const CmdOptions& opt);
void cmd_embed_net(const std::string& config_text, const CmdOptions& opt);
void cmd_pca(const std::string& config_text, const CmdOptions& opt);
void cmd_density(const std::string& config_text, const CmdOptions& opt);
void cmd_uniqueness(const std::string& config_text, const CmdOptions& opt);
void cmd_schedules(const std::string& config_text, const CmdOptions& opt);
void cmd_gravprofile(const std::string& config_text, const CmdOptions& opt);

}  // namespace ddimlab
