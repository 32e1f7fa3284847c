"""
lemmed
Contextual lemmatization and morphological tagging with a character-level attention encoder-decoder
"""
import os
import re
import sys
from setuptools import setup, find_packages

short_description = __doc__.split("\n")

# from https://github.com/pytest-dev/pytest-runner#conditional-requirement
needs_pytest = {'pytest', 'test', 'ptr'}.intersection(sys.argv)
pytest_runner = ['pytest-runner'] if needs_pytest else []

try:
    with open("README.md", "r") as handle:
        long_description = handle.read()
except:
    long_description = "\n".join(short_description[2:])

with open(os.path.join("lemmed", "_version.py")) as handle:
    version = re.search(r'__version__ = "([^"]+)"', handle.read()).group(1)


setup(
    name='lemmed',
    description=short_description[2],
    long_description=long_description,
    long_description_content_type="text/markdown",
    version=version,
    license='BSD-3-Clause',

    packages=find_packages(),

    # ships lemmed/data/*.tsv
    include_package_data=True,
    package_data={'lemmed': ['data/*.tsv']},

    # Allows `setup.py test` to work correctly with pytest
    setup_requires=[] + pytest_runner,

    install_requires=['numpy>=1.17'],
    extras_require={
        'plots': ['plotly'],
        'test': ['pytest', 'pytest-cov'],
    },
    entry_points={
        'console_scripts': ['lemmed=lemmed.cli:main'],
    },
    python_requires=">=3.8",

    zip_safe=False,

)
