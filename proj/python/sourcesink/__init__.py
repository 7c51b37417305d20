try:
    from ._core import *  # noqa: F401,F403
except ImportError:  # running against a build tree
    from _core import *  # noqa: F401,F403
