# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

import ragflarko.selector
from ragflarko.selector import select_entities


class Selector(ragflarko.selector.Selector):

    def __init__(self, config, logger, gateway=None, generation=None):
        self.config = config
        self._logger = logger
        if gateway is None or generation is None:
            raise ValueError('a generator-backed selector needs a gateway')
        self.gateway = gateway
        self.generation = generation
        self.fallback = bool(self.get_param('fallback', True))
        self.fallback_k = int(self.get_param('fallback_k', 10))
        self.prompts = config.get('prompts')

    def select(self, req, instance_id=''):
        return select_entities(
            req,
            self.gateway,
            self.generation,
            prompts=self.prompts,
            instance_id=instance_id,
            fallback=self.fallback,
            fallback_k=self.fallback_k,
            )

    def info(self):
        return \
            "generator selection with '%(model)s'" \
            " (fallback: %(fallback)s)" % {
                'model': self.generation.model_name,
                'fallback': 'RecentK %d' % self.fallback_k
                if self.fallback else 'none',
                }
