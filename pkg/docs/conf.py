# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
# http://www.sphinx-doc.org/en/stable/config

# -- Path setup --------------------------------------------------------------

# In case the project was not installed
import os
import sys
sys.path.insert(0, os.path.abspath('..'))

import lemmed


# -- Project information -----------------------------------------------------

project = 'lemmed'
copyright = "2026, the lemmed developers"
author = 'the lemmed developers'

# The short X.Y version
version = '.'.join(lemmed.__version__.split('.')[:2])
# The full version, including alpha/beta/rc tags
release = lemmed.__version__


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autosummary',
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'sphinx.ext.intersphinx',
]

autosummary_generate = True
napoleon_google_docstring = False
napoleon_use_param = False
napoleon_use_ivar = True

# plotly is an optional extra
autodoc_mock_imports = ['plotly']

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
}

source_suffix = '.rst'
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'default'


# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'lemmeddoc'


# -- Options for LaTeX output ------------------------------------------------

latex_documents = [
    (master_doc, 'lemmed.tex', 'lemmed Documentation', 'lemmed', 'manual'),
]


# -- Options for manual page output ------------------------------------------

man_pages = [
    (master_doc, 'lemmed', 'lemmed Documentation', [author], 1)
]
