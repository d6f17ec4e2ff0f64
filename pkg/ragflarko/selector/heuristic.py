# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

import ragflarko.selector
from ragflarko.exceptions import WrongParamValue
from ragflarko.selector import Policy, heuristic_select


class Selector(ragflarko.selector.Selector):

    def __init__(self, config, logger, gateway=None, generation=None):
        self.config = config
        self._logger = logger
        policy = self.get_param('policy', 'RecentK')
        try:
            self.policy = Policy(policy)
        except ValueError:
            raise WrongParamValue(
                'policy', 'selector', [p.value for p in Policy]
                )
        self.k = int(self.get_param('k', 5))

    def select(self, req, instance_id=''):
        return heuristic_select(req, self.policy, self.k)

    def info(self):
        if self.policy is Policy.All:
            return "all candidates"
        return "%s with k=%d" % (self.policy.value, self.k)
