# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""Run configuration.

A JSON document of sections, each section a flat dict of (dotted) keys:

    {"data": {"transactions.file": "./data/transactions.csv", ...},
     "eval": {"start": "2021-12-01", "end": "2022-11-29"}, ...}

Command-line overrides ('section.key=value') are parsed as python
literals, like CherryPy config values; a value that is not a literal is
kept as a string.
"""

import copy
import logging
import os
from datetime import date

import cherrypy
from cherrypy.lib.reprconf import unrepr

from ragflarko.exceptions import MissingParameter, WrongParamValue, \
    MissingConfigFile, DuplicateConfigKey, MissingDataFile, \
    InvalidParamValue
from ragflarko.evaluation import EvalWindow, HIT_MODES
from ragflarko.gateway import ContextBudget, GenerationConfig
from ragflarko.ingest import ColumnMapping, DEFAULT_COLUMNS
from ragflarko.pipeline import PipelineConfig, PipelineVariant, \
    DEFAULT_REQUEST, FORMAT_INSTRUCTIONS
from ragflarko.pyyamlwrapper import loadNoDump, DumplicatedKey
from ragflarko.kg import DEFAULT_NAMESPACE

DATA_KINDS = ('transactions', 'prices', 'assets')

LITERAL_TYPES = (str, int, float, bool, list, dict, tuple, type(None))


def load_config(path):
    """ Read a config file

    :param path: JSON config file
    :type path: string
    :rtype: dict {<section>: {<key>: <value>}}
    """
    if not os.path.isfile(path):
        raise MissingConfigFile(path)
    try:
        with open(path, 'r', encoding='utf-8') as stream:
            config = loadNoDump(stream)
    except DumplicatedKey as e:
        raise DuplicateConfigKey(e.key, path)
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise InvalidParamValue('<root>', '<root>', 'not a JSON object')
    for section, content in config.items():
        if not isinstance(content, dict):
            raise InvalidParamValue(
                '<section>', section, 'a section must be a JSON object'
                )
    return config


def apply_overrides(config, overrides):
    """ Apply 'section.key=value' overrides in place

    :param config: the configuration
    :type config: dict
    :param overrides: overrides, the key is split at the first dot
    :type overrides: list of string
    """
    for override in overrides or ():
        target, sep, raw = override.partition('=')
        section, dot, key = target.strip().partition('.')
        if not sep or not dot or not key:
            raise InvalidParamValue(
                override, 'command line', "expected 'section.key=value'"
                )
        try:
            value = unrepr(raw)
        except Exception:
            value = raw
        # dotted names resolve to modules, keep them as strings
        if not isinstance(value, LITERAL_TYPES):
            value = raw
        config.setdefault(section, {})[key] = value
    return config


def get_param(config, section, key, default=None):
    """ Get configuration parameter "key" from config
    @str section: the section of the config file
    @str key: the key to get
    @dict config: the configuration (dictionnary)
    @str default: the default value if parameter "key" is not present
    @rtype: value of config[section][key] if present, default otherwise
    """
    if section in config and key in config[section]:
        return config[section][key]
    if default is not None:
        return default
    else:
        raise MissingParameter(section, key)


def parse_date_param(value, key, section):
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise InvalidParamValue(key, section, "expected YYYY-MM-DD")


class RunConfig(object):
    """ Typed accessors over a run configuration

    :param config: sections of the configuration
    :type config: dict
    :param path: file the configuration was read from
    :type path: string
    """

    def __init__(self, config=None, path=None):
        self.config = config if config is not None else {}
        self.path = path

    @classmethod
    def load(cls, path, overrides=()):
        config = apply_overrides(load_config(path), overrides)
        cherrypy.log.error(
            msg="configuration loaded from '%s'" % path,
            severity=logging.DEBUG,
        )
        return cls(config, path)

    def get(self, section, key, default=None):
        return get_param(self.config, section, key, default)

    def section(self, name):
        return dict(self.config.get(name, {}))

    def _int(self, section, key, default, minimum=1):
        value = self.get(section, key, default)
        try:
            value = int(value)
        except (TypeError, ValueError):
            raise InvalidParamValue(key, section, "expected an integer")
        if value < minimum:
            raise InvalidParamValue(
                key, section, "must be >= %d" % minimum
                )
        return value

    def _bool(self, section, key, default):
        value = self.get(section, key, default)
        if isinstance(value, str):
            return value.strip().lower() in ('true', 'yes', 'on', '1')
        return bool(value)

    # data

    def data_file(self, kind, required=True):
        """path of a data file, None if optional and not configured"""
        key = kind + '.file'
        if not required and key not in self.section('data'):
            return None
        return self.get('data', key)

    def check_data_paths(self):
        for kind in DATA_KINDS:
            path = self.data_file(kind, required=(kind != 'assets'))
            if path is not None and not os.path.isfile(path):
                raise MissingDataFile(path, 'data/%s.file' % kind)

    def mapping(self, kind):
        prefix = kind + '.'
        columns = dict(
            (key[len(prefix):], value)
            for key, value in self.section('mapping').items()
            if key.startswith(prefix)
            )
        try:
            return ColumnMapping(kind, columns)
        except KeyError as e:
            raise WrongParamValue(
                prefix + str(e.args[0]), 'mapping',
                [prefix + f for f in sorted(DEFAULT_COLUMNS[kind])],
                )

    def namespace(self):
        return self.get('kg', 'namespace', DEFAULT_NAMESPACE)

    # evaluation

    def eval_window(self):
        start = parse_date_param(
            self.get('eval', 'start'), 'start', 'eval')
        end = parse_date_param(self.get('eval', 'end'), 'end', 'eval')
        try:
            return EvalWindow(
                start=start,
                end=end,
                step_days=self._int('eval', 'step_days', 14),
                horizon_days=self._int('eval', 'horizon_days', 180),
                )
        except ValueError as e:
            raise InvalidParamValue('start/end', 'eval', str(e))

    def users(self):
        users = self.section('eval').get('users')
        if users is None:
            return None
        if isinstance(users, str):
            users = [users]
        return sorted(set(str(u) for u in users))

    def max_users(self):
        if 'max_users' not in self.section('eval'):
            return None
        return self._int('eval', 'max_users', 1)

    def active_users_only(self):
        return self._bool('eval', 'active_users_only', False)

    def hit_mode(self):
        mode = self.get('eval', 'hit_mode', 'binary')
        if mode not in HIT_MODES:
            raise WrongParamValue('hit_mode', 'eval', HIT_MODES)
        return mode

    # pipeline

    def variants(self):
        names = self.get(
            'pipeline', 'variants', [v.value for v in PipelineVariant]
            )
        if isinstance(names, str):
            names = [names]
        possible = [v.value for v in PipelineVariant]
        if not names:
            raise WrongParamValue('variants', 'pipeline', possible)
        ret = []
        for name in names:
            try:
                variant = PipelineVariant(name)
            except ValueError:
                raise WrongParamValue('variants', 'pipeline', possible)
            if variant not in ret:
                ret.append(variant)
        return ret

    def generation(self):
        try:
            return GenerationConfig.from_params(self.section('generator'))
        except (TypeError, ValueError) as e:
            raise InvalidParamValue('generation', 'generator', str(e))

    def budget(self):
        try:
            return ContextBudget(
                max_context_tokens=self._int(
                    'budget', 'max_context_tokens', 32768),
                chars_per_token=self._int('budget', 'chars_per_token', 4),
                )
        except ValueError as e:
            raise InvalidParamValue('budget', 'budget', str(e))

    def pipeline_config(self, vocab, prompts=None):
        version = self.get('pipeline', 'format_version', 'v1')
        if version not in FORMAT_INSTRUCTIONS:
            raise WrongParamValue(
                'format_version', 'pipeline', sorted(FORMAT_INSTRUCTIONS)
                )
        return PipelineConfig(
            vocab=vocab,
            request=self.get('pipeline', 'request', DEFAULT_REQUEST),
            format_version=version,
            asset_completion=self._bool(
                'pipeline', 'asset_completion', True),
            budget=self.budget(),
            generation=self.generation(),
            prompts=prompts,
            )

    # run

    def output_dir(self):
        return self.get('run', 'output_dir', 'flarko-run')

    def workers(self):
        return self._int('run', 'workers', 4)

    def seed(self):
        return self._int('run', 'seed', 0, minimum=0)

    def cutoff(self):
        return parse_date_param(self.get('run', 'cutoff'), 'cutoff', 'run')

    def snapshot(self):
        """JSON-serializable copy, python objects (responders...) left out"""
        ret = {}
        for section in sorted(self.config):
            ret[section] = {}
            for key, value in self.config[section].items():
                if isinstance(value, (str, int, float, bool, list, dict,
                                      type(None))):
                    ret[section][key] = copy.deepcopy(value)
                elif isinstance(value, date):
                    ret[section][key] = value.isoformat()
        return ret
