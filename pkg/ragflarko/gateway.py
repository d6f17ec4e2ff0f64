# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""Chat-completion access shared by every pipeline stage.

The Gateway checks the context budget, admits at most parallelism_cap
requests at a time, retries transient backend failures with exponential
backoff and appends one audit record per call.
"""

import json
import logging
import math
import threading
import time
from dataclasses import dataclass, asdict
from enum import Enum

import cherrypy
from tenacity import Retrying, retry_if_exception_type, \
    stop_after_attempt, wait_exponential

from ragflarko.exceptions import BudgetError, TransientError, \
    TransportError, ProtocolError, WrongMessage


class Role(Enum):
    System = 'system'
    User = 'user'
    Assistant = 'assistant'


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self):
        if self.role in (Role.System, Role.User) and not self.content:
            raise WrongMessage(self.role.value)

    def to_dict(self):
        return {'role': self.role.value, 'content': self.content}


@dataclass(frozen=True)
class GenerationConfig:
    endpoint_url: str = 'http://127.0.0.1:8000/v1'
    model_name: str = 'Qwen/Qwen3-1.7B'
    temperature: float = 0.0
    max_output_tokens: int = 512
    timeout: float = 60.0
    max_retries: int = 3
    parallelism_cap: int = 4
    # seconds, first backoff delay
    backoff: float = 1.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError('temperature must be >= 0')
        if self.max_output_tokens < 1:
            raise ValueError('max_output_tokens must be positive')
        if self.max_retries < 0:
            raise ValueError('max_retries must be >= 0')
        if self.parallelism_cap < 1:
            raise ValueError('parallelism_cap must be positive')

    @classmethod
    def from_params(cls, params):
        """build from a config section, unknown keys are ignored"""
        fields = cls.__dataclass_fields__
        kwargs = {}
        for name in fields:
            if name in params:
                kwargs[name] = fields[name].type(params[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class ContextBudget:
    max_context_tokens: int = 32768
    chars_per_token: int = 4

    def __post_init__(self):
        if self.max_context_tokens < 1:
            raise ValueError('max_context_tokens must be positive')
        if self.chars_per_token <= 0:
            raise ValueError('chars_per_token must be positive')


def estimate_tokens(messages, budget):
    """ Estimated token count of a prompt

    :param messages: the prompt
    :type messages: list of ChatMessage
    :param budget: gives the characters per token divisor
    :type budget: ContextBudget
    :rtype: int, sum over messages of ceil(characters / divisor)
    """
    return sum(
        int(math.ceil(len(m.content) / float(budget.chars_per_token)))
        for m in messages
        )


class AuditLog(object):
    """Append-only JSON-lines transcript of generator calls"""

    def __init__(self, path=None):
        self.path = path
        self.records = []
        self._lock = threading.Lock()

    def write(self, record):
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock:
            self.records.append(record)
            if self.path is not None:
                with open(self.path, 'a', encoding='utf-8') as f:
                    f.write(line + '\n')

    def for_instance(self, instance_id):
        with self._lock:
            return [
                r for r in self.records if r['instance_id'] == instance_id
                ]


class Gateway(object):
    """ Generator front-end used by selectors and the pipeline

    :param backend: generator backend doing a single attempt per send()
    :type backend: ragflarko.backend.Backend
    :param budget: context budget checked before any call
    :type budget: ContextBudget
    :param audit: audit log, in memory only when None
    :type audit: AuditLog
    :param parallelism_cap: maximum number of in-flight requests
    :type parallelism_cap: int
    """

    def __init__(self, backend, budget, audit=None, parallelism_cap=4):
        self.backend = backend
        self.budget = budget
        self.audit = audit if audit is not None else AuditLog()
        self._gate = threading.BoundedSemaphore(parallelism_cap)

    def estimate(self, messages):
        return estimate_tokens(messages, self.budget)

    def complete(self, messages, config, instance_id='', stage=''):
        """ Send a chat prompt and return the assistant text

        :param messages: the prompt, sent untouched
        :type messages: list of ChatMessage
        :param config: generation parameters
        :type config: GenerationConfig
        :param instance_id: audit key (and mock script key)
        :type instance_id: string
        :param stage: audit label ('PTR', 'MR', 'generation')
        :type stage: string
        :rtype: string

        .. warning:: raise BudgetError (no call made), TransportError
            once retries are exhausted, ProtocolError on an unusable
            response body
        """
        estimate = self.estimate(messages)
        if estimate > self.budget.max_context_tokens:
            raise BudgetError(estimate, self.budget.max_context_tokens)

        attempts = [0]

        def attempt():
            attempts[0] += 1
            return self.backend.send(messages, config, instance_id, stage)

        retrying = Retrying(
            retry=retry_if_exception_type(TransientError),
            stop=stop_after_attempt(config.max_retries + 1),
            wait=wait_exponential(multiplier=config.backoff, max=30),
            before_sleep=self._log_retry,
            reraise=True,
            )
        start = time.monotonic()
        record = {
            'instance_id': instance_id,
            'stage': stage,
            'model': config.model_name,
            'messages': [m.to_dict() for m in messages],
        }
        try:
            with self._gate:
                response = retrying(attempt)
            if not isinstance(response, str):
                raise ProtocolError('non-text completion')
        except TransientError as e:
            error = TransportError(e.reason, attempts[0])
            self._audit(record, None, attempts[0], start, error)
            raise error
        except TransportError as e:
            error = TransportError(e.reason, attempts[0])
            self._audit(record, None, attempts[0], start, error)
            raise error
        except ProtocolError as e:
            self._audit(record, None, attempts[0], start, e)
            raise
        self._audit(record, response, attempts[0], start, None)
        return response

    def _audit(self, record, response, attempts, start, error):
        record['response'] = response
        record['attempts'] = attempts
        record['latency_ms'] = int((time.monotonic() - start) * 1000)
        if error is not None:
            record['error'] = error.log
            cherrypy.log.error(
                msg="%s %s: %s" % (
                    record['instance_id'], record['stage'], error.log),
                severity=logging.ERROR,
            )
        self.audit.write(record)

    @staticmethod
    def _log_retry(retry_state):
        cherrypy.log.error(
            msg="attempt %d failed (%s), retrying" % (
                retry_state.attempt_number,
                retry_state.outcome.exception()),
            severity=logging.WARNING,
        )


def generation_config_dict(config):
    return asdict(config)
