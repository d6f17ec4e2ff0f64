# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

import logging
import os

import cherrypy
from mako import exceptions
from mako import lookup

from ragflarko.exceptions import TemplateRenderError

DEFAULT_TEMPLATE_DIR = os.path.join(os.path.dirname(__file__), 'templates')

TEMPLATES = (
    'selection_system.mako',
    'selection_user.mako',
    'generation_pkg.mako',
    'generation_mkg.mako',
    'generation_user.mako',
    'report.mako',
)


class Prompts(object):
    """ Prompt and report templates

    :param template_dir: directory holding the .mako files
    :type template_dir: string
    """

    def __init__(self, template_dir=None):
        self.template_dir = template_dir or DEFAULT_TEMPLATE_DIR
        cherrypy.log.error(
            msg="loading templates from dir '%(dir)s'" %
                {'dir': self.template_dir},
            severity=logging.DEBUG
        )
        self.temp_lookup = lookup.TemplateLookup(
            directories=self.template_dir,
            input_encoding='utf-8',
            default_filters=['str'],
            )
        self.temp = {}
        for t in TEMPLATES:
            self.temp[t] = self.temp_lookup.get_template(t)

    def render(self, name, **kwargs):
        """render a template, surrounding blank lines stripped"""
        try:
            text = self.temp[name].render(**kwargs)
        except Exception:
            raise TemplateRenderError(
                exceptions.text_error_template().render()
                )
        return text.strip('\n')


_default = []


def get_prompts():
    """templates of the package directory, loaded once"""
    if not _default:
        _default.append(Prompts())
    return _default[0]
