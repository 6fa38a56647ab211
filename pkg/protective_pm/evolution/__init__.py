from .schedule import *
from .crank_nicolson import *
from .eigen import *
