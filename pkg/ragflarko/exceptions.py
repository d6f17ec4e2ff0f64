# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko


class RagFlarkoError(Exception):
    log = "ragflarko error"

    def __str__(self):
        return self.log


class MissingParameter(RagFlarkoError):
    def __init__(self, section, key):
        self.section = section
        self.key = key
        self.log = \
            "missing parameter '%(key)s' in section '%(section)s'" % \
            {'key': key, 'section': section}


class WrongParamValue(RagFlarkoError):
    def __init__(self, param, section, possible_values):
        self.possible_values = possible_values
        self.section = section
        self.param = param
        self.log = \
            "wrong value for param '%(param)s' in section '%(section)s'" \
            ", possible values are [%(values)s]" % \
            {
                'param': param,
                'section': section,
                'values': ', '.join(possible_values),
            }


class InvalidParamValue(RagFlarkoError):
    def __init__(self, param, section, reason):
        self.param = param
        self.section = section
        self.reason = reason
        self.log = \
            "invalid value for param '%(param)s' in section '%(section)s'" \
            ": %(reason)s" % \
            {'param': param, 'section': section, 'reason': reason}


class MissingConfigFile(RagFlarkoError):
    def __init__(self, config):
        self.config = config
        self.log = \
            "fail to open config file '%(config)s'" % \
            {'config': config}


class DuplicateConfigKey(RagFlarkoError):
    def __init__(self, key, config):
        self.key = key
        self.config = config
        self.log = \
            "duplicate key '%(key)s' in config file '%(config)s'" % \
            {'key': key, 'config': config}


class BackendModuleLoadingFail(RagFlarkoError):
    def __init__(self, module):
        self.module = module
        self.log = \
            "module '%(module)s' not in python path" % \
            {'module': module}


class BackendModuleInitFail(RagFlarkoError):
    def __init__(self, module):
        self.module = module
        self.log = \
            "fail to init module '%(module)s'" % \
            {'module': module}


class MissingDataFile(RagFlarkoError):
    def __init__(self, datafile, param):
        self.datafile = datafile
        self.param = param
        self.log = \
            "data file '%(datafile)s' given by '%(param)s' does not exist" % \
            {'datafile': datafile, 'param': param}


class MissingColumn(RagFlarkoError):
    def __init__(self, column, kind):
        self.column = column
        self.kind = kind
        self.log = \
            "missing column '%(column)s' in %(kind)s file" % \
            {'column': column, 'kind': kind}


class WrongTerm(RagFlarkoError):
    def __init__(self, value, reason):
        self.value = value
        self.reason = reason
        self.log = \
            "invalid term '%(value)s': %(reason)s" % \
            {'value': value, 'reason': reason}


class WrongTriple(RagFlarkoError):
    def __init__(self, triple, position):
        self.triple = triple
        self.position = position
        self.log = \
            "triple %(triple)s has a literal %(position)s" % \
            {'triple': triple, 'position': position}


class EmptyNodeList(RagFlarkoError):
    def __init__(self):
        self.log = "cannot render a CONSTRUCT query without nodes"


class EmptyCandidates(RagFlarkoError):
    def __init__(self, stage):
        self.stage = stage
        self.log = \
            "no candidate entity for stage '%(stage)s'" % \
            {'stage': stage}


class WrongMessage(RagFlarkoError):
    def __init__(self, role):
        self.role = role
        self.log = \
            "empty content in '%(role)s' message" % \
            {'role': role}


class BudgetError(RagFlarkoError):
    def __init__(self, estimate, budget):
        self.estimate = estimate
        self.budget = budget
        self.log = \
            "prompt estimated at %(estimate)d tokens exceeds" \
            " the context budget of %(budget)d tokens" % \
            {'estimate': estimate, 'budget': budget}


class TransientError(RagFlarkoError):
    def __init__(self, reason):
        self.reason = reason
        self.log = "transient generator failure: " + str(reason)


class TransportError(RagFlarkoError):
    def __init__(self, reason, attempts):
        self.reason = reason
        self.attempts = attempts
        self.log = \
            "generator unreachable after %(attempts)d attempt(s):" \
            " %(reason)s" % \
            {'attempts': attempts, 'reason': reason}


class ProtocolError(RagFlarkoError):
    def __init__(self, reason):
        self.reason = reason
        self.log = "unparseable generator response: " + str(reason)


class MissingTargets(RagFlarkoError):
    def __init__(self, instance_ids):
        self.instance_ids = instance_ids
        self.log = \
            "no target sets for instance(s): " + ', '.join(instance_ids)


class NoResults(RagFlarkoError):
    def __init__(self, path):
        self.path = path
        self.log = \
            "no results in '%(path)s'" % \
            {'path': path}


class EmptyReport(RagFlarkoError):
    def __init__(self):
        self.log = "no metrics report to emit"


class TemplateRenderError(RagFlarkoError):
    def __init__(self, error):
        self.log = "Template Render Error: " + error
