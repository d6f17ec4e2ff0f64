#!/usr/bin/env python
# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
# The MIT License (MIT)
# RagFlarko

"""The ragflarko command."""

import logging
import os.path
import sys
from optparse import OptionParser

import cherrypy
import pandas as pd

from ragflarko import RagFlarko
from ragflarko.config import RunConfig, load_config, apply_overrides, \
    parse_date_param
from ragflarko.exceptions import RagFlarkoError, MissingParameter, \
    WrongParamValue, InvalidParamValue, MissingConfigFile, \
    DuplicateConfigKey, BackendModuleLoadingFail, BackendModuleInitFail, \
    TemplateRenderError, WrongTerm, MissingDataFile, MissingColumn, \
    NoResults, MissingTargets, EmptyReport
from ragflarko.rflogging import get_loglevel, set_error_log
from ragflarko.synth import write_dataset

COMMANDS = ('build-kg', 'run', 'evaluate', 'synth', 'report')

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3

CONFIG_ERRORS = (
    MissingParameter,
    WrongParamValue,
    InvalidParamValue,
    MissingConfigFile,
    DuplicateConfigKey,
    BackendModuleLoadingFail,
    BackendModuleInitFail,
    TemplateRenderError,
    WrongTerm,
)

DATA_ERRORS = (
    MissingDataFile,
    MissingColumn,
    NoResults,
    MissingTargets,
    EmptyReport,
    pd.errors.ParserError,
    pd.errors.EmptyDataError,
    UnicodeDecodeError,
)


def exit_code(e):
    """exit code of an exception stopping a command"""
    if isinstance(e, CONFIG_ERRORS):
        return EXIT_CONFIG
    if isinstance(e, DATA_ERRORS):
        return EXIT_DATA
    return EXIT_CONFIG


def _error(e):
    msg = e.log if hasattr(e, 'log') else str(e)
    sys.stderr.write('ragflarko: %s\n' % msg)


def _synth(options):
    config = {}
    if options.config is not None:
        config = load_config(options.config)
    apply_overrides(config, options.overrides)
    run_config = RunConfig(config, options.config)
    set_error_log(
        run_config.get('global', 'log.error_handler', 'stdout'),
        get_loglevel(run_config.get('global', 'log.level', 'info')),
        run_config.section('global').get('log.error_file'),
        options.debug,
        )
    params = run_config.section('synth')
    output_dir = params.get('output_dir', 'flarko-data')
    write_dataset(
        output_dir,
        users=int(params.get('users', 10)),
        assets=int(params.get('assets', 20)),
        start=str(params.get('start', '2020-01-01')),
        end=str(params.get('end', '2022-12-31')),
        seed=int(params.get('seed', run_config.seed())),
        )
    return EXIT_OK


def _command(command, options):
    if command == 'synth':
        return _synth(options)

    config = RunConfig.load(options.config, options.overrides)
    app = RagFlarko()
    app.reload(config, options.debug)

    if command == 'build-kg':
        if options.cutoff is not None:
            cutoff = parse_date_param(
                options.cutoff, 'cutoff', 'command line'
                )
        else:
            cutoff = config.cutoff()
        app.build_kg(cutoff, options.output)
        return EXIT_OK

    if command == 'run':
        summary = app.run(options.output)
        return EXIT_PARTIAL if summary['failed'] else EXIT_OK

    if command == 'evaluate':
        app.evaluate(options.results, options.output)
        return EXIT_OK

    # report
    path = options.results or os.path.join(
        options.output or config.output_dir(), 'report.json'
        )
    print(app.report(path))
    return EXIT_OK


def main(argv=None):
    p = OptionParser(
        usage="%prog <" + '|'.join(COMMANDS) + "> -c <config> [options]"
        )
    p.add_option('-c', '--config', dest='config',
                 help="specify config file")
    p.add_option('-o', '--option', action="append", dest='overrides',
                 default=[],
                 help="override a config value (section.key=value)")
    p.add_option('--cutoff', dest='cutoff', default=None,
                 help="cutoff date of build-kg (YYYY-MM-DD)")
    p.add_option('-r', '--results', dest='results', default=None,
                 help="results file (evaluate) or report.json (report)")
    p.add_option('-O', '--output', dest='output', default=None,
                 help="output directory (default: run.output_dir)")
    p.add_option('-D', '--debug', action="store_true", dest='debug',
                 default=False,
                 help="debug to stderr in foreground")
    options, args = p.parse_args(argv)

    if len(args) != 1 or args[0] not in COMMANDS:
        sys.stderr.write(p.get_usage())
        return EXIT_CONFIG
    command = args[0]

    if command != 'synth':
        if options.config is None:
            print('-c|--config <path/to/config/file> is mandatory')
            return EXIT_CONFIG
        if not os.path.isfile(options.config):
            print('configuration file "' + options.config +
                  '" doesn\'t exist')
            return EXIT_CONFIG

    try:
        return _command(command, options)
    except (RagFlarkoError, ) + DATA_ERRORS as e:
        _error(e)
        return exit_code(e)
    except Exception as e:
        _error(e)
        cherrypy.log.error(
            msg='',
            severity=logging.DEBUG,
            traceback=True,
        )
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
