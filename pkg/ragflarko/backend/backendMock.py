# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

# This is a scripted, deterministic generator backend


import re
import threading

import ragflarko.backend
from ragflarko.exceptions import TransientError, ProtocolError
from ragflarko.pyyamlwrapper import loadNoDump

ISIN_TOKEN = re.compile(r'[A-Z]{2}[A-Z0-9]{9}[0-9]')


class Backend(ragflarko.backend.Backend):

    def __init__(self, config, logger, name):
        """ Initialize the backend

        Three ways to answer, tried in order:

        * 'responder': callable(messages, instance_id, stage) -> string
        * 'script': responses per stage ({<stage>: [entries]}) or for
          every stage ([entries]), as a list/dict or the path of a
          YAML/JSON file; each (call key, stage) pair walks the entries
          with its own cursor and repeats the last one. Pipeline runs use
          '<user>@<cutoff>/<variant>' call keys. An entry is the
          response text, {"fail": "transient"} or {"fail": "garbage"}.
        * echo mode: selection stages answer the first 'select_k'
          candidate lines, generation answers the first three ISINs
          found in the context messages.

        :param config: the configuration of the backend
        :type config: dict {'config key': 'value'}
        :param logger: the cherrypy error logger object
        :type logger: python logger
        :param name: id of the backend
        :type name: string
        """
        self.config = config
        self._logger = logger
        self.backend_name = name
        self.responder = config.get('responder')
        self.select_k = int(self.get_param('select_k', 3))
        self.unreachable = bool(config.get('unreachable', False))
        self.script = self._load_script(config.get('script'))
        self.calls = 0
        self._cursors = {}
        self._lock = threading.Lock()

    @staticmethod
    def _load_script(script):
        if isinstance(script, str):
            with open(script, 'r') as stream:
                script = loadNoDump(stream)
        if script is None:
            return None
        if isinstance(script, list):
            return {'*': script}
        return dict(script)

    def _next_entry(self, instance_id, stage):
        entries = self.script.get(stage, self.script.get('*'))
        if not entries:
            return None
        with self._lock:
            cursor = self._cursors.get((instance_id, stage), 0)
            self._cursors[(instance_id, stage)] = cursor + 1
        return entries[min(cursor, len(entries) - 1)]

    def send(self, messages, config, instance_id, stage):
        with self._lock:
            self.calls += 1
        if self.unreachable:
            raise TransientError('mock endpoint unreachable')
        if self.responder is not None:
            return self.responder(messages, instance_id, stage)
        if self.script is not None:
            entry = self._next_entry(instance_id, stage)
            if isinstance(entry, dict):
                if entry.get('fail') == 'garbage':
                    raise ProtocolError('scripted garbage body')
                raise TransientError('scripted failure')
            if entry is not None:
                return str(entry)
        return self._echo(messages, stage)

    def _echo(self, messages, stage):
        if stage in ('PTR', 'MR'):
            lines = [
                line.strip() for line in messages[-1].content.splitlines()
                ]
            candidates = [
                line for line in lines
                if line and ' ' not in line and ':' in line
                ]
            return '\n'.join(candidates[:self.select_k])
        found = []
        for m in messages:
            if m.role.value != 'system':
                continue
            for isin in ISIN_TOKEN.findall(m.content):
                if isin not in found:
                    found.append(isin)
        return '\n'.join(found[:3])
