# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

# OpenAI-compatible chat-completions backend (vLLM, llama.cpp server,
# hosted APIs...)

import logging
import os
import threading

import openai

import ragflarko.backend
from ragflarko.exceptions import TransientError, TransportError, \
    ProtocolError


class Backend(ragflarko.backend.Backend):

    def __init__(self, config, logger, name):
        """ Initialize the backend

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
        self.api_key_env = self.get_param('api_key_env', 'FLARKO_API_KEY')
        self.api_key = os.environ.get(self.api_key_env)
        if not self.api_key:
            # local servers accept any key
            self._logger(
                msg="environment variable '%s' is not set" %
                    self.api_key_env,
                severity=logging.WARNING,
            )
            self.api_key = 'EMPTY'
        self.seed = config.get('seed')
        self._clients = {}
        self._lock = threading.Lock()

    def _client(self, config):
        key = (config.endpoint_url, config.timeout)
        with self._lock:
            if key not in self._clients:
                self._clients[key] = openai.OpenAI(
                    api_key=self.api_key,
                    base_url=config.endpoint_url,
                    timeout=config.timeout,
                    # retries are done by the gateway
                    max_retries=0,
                    )
            return self._clients[key]

    def send(self, messages, config, instance_id, stage):
        client = self._client(config)
        extra = {}
        if self.seed is not None:
            extra['seed'] = int(self.seed)
        try:
            response = client.chat.completions.create(
                model=config.model_name,
                messages=[m.to_dict() for m in messages],
                temperature=config.temperature,
                max_tokens=config.max_output_tokens,
                stream=False,
                **extra
                )
        except openai.APIResponseValidationError as e:
            raise ProtocolError(str(e))
        except (openai.APIConnectionError,
                openai.RateLimitError,
                openai.InternalServerError) as e:
            raise TransientError(str(e))
        except openai.APIStatusError as e:
            raise TransportError(str(e), 1)
        except ValueError as e:
            raise ProtocolError(str(e))
        try:
            content = response.choices[0].message.content
        except (AttributeError, IndexError, TypeError) as e:
            raise ProtocolError(str(e))
        if content is None:
            raise ProtocolError('empty message content')
        self._logger(
            msg="%s %s: %d char(s) generated by '%s'" % (
                instance_id, stage, len(content), config.model_name),
            severity=logging.DEBUG,
        )
        return content
