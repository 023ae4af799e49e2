try:
    from ._cachenet import *  # noqa: F401,F403  (installed layout)
except ImportError:
    from _cachenet import *  # noqa: F401,F403  (in-tree build dir on PYTHONPATH)
