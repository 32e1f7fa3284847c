"""
lemmed
Contextual lemmatization and morphological tagging with a character-level
attentional encoder-decoder
"""

# Add imports here
from .conllu import *
from .snippets import *
from .model import *
from .training import *
from .decode import *
from .evaluation import *
from .synthetic import *
from .errors import *

from ._version import __version__
