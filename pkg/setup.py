#!/usr/bin/env python
# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:

import os
import re
import sys

small_description = \
    'Multi-stage knowledge graph retrieval for LLM financial recommendation'

sys.path.append('ragflarko/')
from version import version

install_requires = [
    'CherryPy >= 3.0.0',
    'PyYAML',
    'Mako',
    'openai >= 1.0.0',
    'tenacity',
    'pandas >= 1.5.0',
    'numpy',
    ]

try:
    f = open(os.path.join(os.path.dirname(__file__), 'README.rst'))
    description = f.read()
    f.close()
except IOError:
    description = small_description

try:
    license = open('LICENSE').read()
except IOError:
    license = 'MIT'

try:
    from setuptools import setup
    from setuptools.command.test import test as TestCommand

    class PyTest(TestCommand):
        def finalize_options(self):
            TestCommand.finalize_options(self)
            self.test_args = []
            self.test_suite = True

        def run_tests(self):
            # import here, cause outside the eggs aren't loaded
            import pytest
            errno = pytest.main(self.test_args)
            sys.exit(errno)
except ImportError:
    from distutils.core import setup

    def PyTest(x):
        x


def as_option_root():
    for arg in sys.argv:
        if re.match(r'--root.*', arg):
            return True
    return False


# sample configuration, installed if not already there
sysconfdir = os.getenv("SYSCONFDIR", "/etc")
config_dir = os.path.join(sysconfdir, 'ragflarko')
data_files = []
if as_option_root() or not os.path.exists(config_dir):
    data_files.append((config_dir, ['conf/ragflarko.json']))


setup(
    name='ragflarko',
    zip_safe=False,
    version=version,
    packages=[
        'ragflarko',
        'ragflarko.backend',
        'ragflarko.selector',
        ],
    package_data={'ragflarko': ['templates/*.mako']},
    data_files=data_files,
    entry_points={
        'console_scripts': ['ragflarko = ragflarko.cli:main']
    },
    license=license,
    description=small_description,
    long_description=description,
    install_requires=install_requires,
    tests_require=['pytest', 'pep8', 'rdflib'],
    cmdclass={'test': PyTest},
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Operating System :: POSIX',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Topic :: Office/Business :: Financial :: Investment',
        ],
)
