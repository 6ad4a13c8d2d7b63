from ._ddimlab import *  # noqa: F401,F403
