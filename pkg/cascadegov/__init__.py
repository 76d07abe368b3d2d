# encoding: utf-8
# flake8: noqa

from sdsstools import get_logger, get_package_version


NAME = "cascade-governor"

__version__ = get_package_version(__file__, NAME) or "dev"

log = get_logger("cascadegov")


from .events import *
from .exceptions import *
from .geometry import *
from .governor import *
from .model import *
from .notifier import *
from .numerics import *
from .rhop import *
from .sets import *
from .sim import *
from .verify import *
