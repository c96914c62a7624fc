from ._mulog import *  # noqa: F401,F403
