# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

# Generic imports
import sys
import logging
import logging.handlers
import cherrypy


# Replacement for cherrypy's error.log function, which prefixes
# every message with a date and a context
def syslog_error(
        msg='',
        context='',
        severity=logging.INFO,
        traceback=False
        ):

    if traceback and msg == '':
        msg = 'Python Exception:'
    if context == '':
        cherrypy.log.error_log.log(severity, msg)
    else:
        cherrypy.log.error_log.log(
            severity,
            ' '.join((context, msg))
            )
    if traceback:
        import traceback
        try:
            exc = sys.exc_info()
            if exc == (None, None, None):
                return
            # one log entry per traceback line
            for line in traceback.format_exception(*exc):
                cherrypy.log.error_log.log(severity, line.rstrip('\n'))
        finally:
            del exc


def get_loglevel(level):
    """ return logging level object
    corresponding to a given level passed as
    a string
    @str level: name of a syslog log level
    @rtype: logging, logging level from logging module
    """
    if level == 'debug':
        return logging.DEBUG
    elif level in ('notice', 'info'):
        return logging.INFO
    elif level in ('warning', 'warn'):
        return logging.WARNING
    elif level in ('error', 'err'):
        return logging.ERROR
    elif level in ('critical', 'crit', 'alert', 'emergency', 'emerg'):
        return logging.CRITICAL
    else:
        return logging.INFO


def set_error_log(error_handler, level, error_file=None, debug=False):
    """ Configure the error log (the application log)
    @str error_handler: one of 'stdout', 'syslog', 'file', 'none'
    @int level: logging level
    @str error_file: log file, used by the 'file' handler
    @bool debug: force debug logging on stderr
    """
    cherrypy.log.screen = False
    cherrypy.log.error_log.handlers = []
    cherrypy.log.error = syslog_error

    if error_handler == 'syslog':
        handler = logging.handlers.SysLogHandler(
            address='/dev/log',
            facility='user',
            )
        handler.setFormatter(
            logging.Formatter("ragflarko[%(process)d]: %(message)s")
            )
    elif error_handler == 'stdout':
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(
            logging.Formatter('ragflarko - %(levelname)s - %(message)s')
            )
    elif error_handler == 'file':
        handler = logging.FileHandler(error_file, encoding='utf-8')
        handler.setFormatter(
            logging.Formatter(
                '%(asctime)s ragflarko - %(levelname)s - %(message)s'
                )
            )
    else:
        handler = logging.NullHandler()
    cherrypy.log.error_log.addHandler(handler)
    cherrypy.log.error_log.setLevel(level)

    if debug:
        cherrypy.log.error_log.handlers = []
        handler = logging.StreamHandler(sys.stderr)
        handler.setLevel(logging.DEBUG)
        cherrypy.log.error_log.addHandler(handler)
        cherrypy.log.error_log.setLevel(logging.DEBUG)
