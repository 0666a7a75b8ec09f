from .develop import develop
from .doc import doc
from .experiment import experiment
from .geometry_check import geometry_check
from .lint import lint
from .params import params
from .series import series
from .simulate import simulate
from .test import test
