from .grid import *
from .states import *
from .observables import *
