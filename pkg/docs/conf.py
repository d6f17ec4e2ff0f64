# -*- coding: utf-8 -*-
#
# RagFlarko documentation build configuration file

import os
import sys

try:
    from unittest.mock import MagicMock
except ImportError:
    from mock import Mock as MagicMock


class Mock(MagicMock):
    @classmethod
    def __getattr__(cls, name):
        return Mock()

# autodoc imports the package without its runtime dependencies
MOCK_MODULES = ['cherrypy', 'cherrypy.lib', 'cherrypy.lib.reprconf',
                'openai', 'tenacity', 'pandas', 'numpy']
sys.modules.update((mod_name, Mock()) for mod_name in MOCK_MODULES)

sys.path.insert(0, os.path.abspath('..'))
sys.path.insert(0, os.path.abspath('../ragflarko'))

from version import version

extensions = ['sphinx.ext.viewcode', 'sphinx.ext.autodoc']
source_suffix = '.rst'
master_doc = 'index'

project = u'RagFlarko'
copyright = u'2026, RagFlarko developers'
release = version

exclude_patterns = ['_build', 'README.rst']
pygments_style = 'sphinx'

html_theme = 'nature'
html_title = 'RagFlarko %s Docs' % release
html_last_updated_fmt = '%b %d, %Y'
html_use_index = False
html_show_sourcelink = False
html_show_sphinx = False
htmlhelp_basename = 'RagFlarko-docs'
