# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""Entity selection for the retrieval stages.

A selector receives the candidate entities of a stage (transactions for
PTR, ten-week price summaries for MR) and returns the subset to retrieve.
Selector plugins (ragflarko.selector.llm, ragflarko.selector.heuristic)
are loaded by module name like generator backends.
"""

import logging
import re
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum

import cherrypy

from ragflarko.exceptions import EmptyCandidates, MissingParameter
from ragflarko.gateway import ChatMessage, Role
from ragflarko.prompts import get_prompts

# tokens of a free-form answer: anything between separators
_TOKEN = re.compile(r'[^\s<>"\'`,;()\[\]{}|]+')
# what an entity local name looks like (Transaction_12, Asset_3...)
_ENTITY_NAME = re.compile(r'^[A-Za-z][A-Za-z0-9]*_[0-9]+$')

ENTITY_KINDS = {
    'PTR': 'transactions',
    'MR': 'ten-week price summaries',
}


class Stage(Enum):
    PTR = 'PTR'
    MR = 'MR'


class Policy(Enum):
    All = 'All'
    RecentK = 'RecentK'
    RoundRobinK = 'RoundRobinK'


@dataclass(frozen=True)
class SelectionRequest:
    """ Input of a selection

    dates holds the date associated to each candidate (transaction
    timestamp or summary period end), groups its asset; both feed the
    heuristics and the fallback.
    """
    user_request: str
    candidates: tuple
    stage: Stage
    prior_context: str = None
    dates: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple
    raw_response: str = ''
    dropped_hallucinations: tuple = ()
    fallback: bool = False
    # candidates left out of the prompt to fit the budget
    truncated: int = 0
    prompt_tokens: int = 0


def build_selection_prompt(req, prompts=None):
    """ Selection prompt of a request

    :param req: the selection request
    :type req: SelectionRequest
    :param prompts: templates, package ones when None
    :type prompts: ragflarko.prompts.Prompts
    :rtype: list of ChatMessage (system, user)
    """
    if not req.candidates:
        raise EmptyCandidates(req.stage.value)
    prompts = prompts or get_prompts()
    system = prompts.render(
        'selection_system.mako',
        prior_context=req.prior_context,
        entity_kind=ENTITY_KINDS[req.stage.value],
        )
    user = prompts.render(
        'selection_user.mako',
        request=req.user_request,
        candidates=[c.value for c in req.candidates],
        )
    return [ChatMessage(Role.System, system), ChatMessage(Role.User, user)]


def parse_selection_response(raw, candidates):
    """ Candidates mentioned in a free-form answer

    A token matches a candidate by full IRI, or by local name as a
    fallback. Entity-shaped tokens matching no candidate are reported as
    hallucinations. Never fails.

    :param raw: the generator answer
    :type raw: string
    :param candidates: the entities offered
    :type candidates: list of Term
    :rtype: SelectionResult, selection in first-mention order
    """
    by_iri = dict((c.value, c) for c in candidates)
    by_local = {}
    for c in sorted(candidates):
        by_local.setdefault(c.local_name(), c)
    selected = []
    dropped = []
    for match in _TOKEN.finditer(raw or ''):
        token = match.group(0).strip('.:*#-')
        if not token:
            continue
        if token in by_iri:
            hit = by_iri[token]
        else:
            local = re.split(r'[#/:]', token)[-1]
            hit = by_local.get(local)
            if hit is None:
                if _ENTITY_NAME.match(local) and token not in dropped:
                    dropped.append(token)
                continue
        if hit not in selected:
            selected.append(hit)
    return SelectionResult(
        selected=tuple(selected),
        raw_response=raw if isinstance(raw, str) else '',
        dropped_hallucinations=tuple(dropped),
        )


def _recency_order(req):
    oldest = date.min
    return sorted(
        req.candidates,
        key=lambda c: (-(req.dates.get(c) or oldest).toordinal(), c.value),
        )


def heuristic_select(req, policy, k=1):
    """ Deterministic selection without generator

    :param req: the selection request
    :type req: SelectionRequest
    :param policy: All, RecentK (k latest candidates, ties by IRI) or
        RoundRobinK (k candidates spread over their groups)
    :type policy: Policy
    :param k: number of entities for the K policies
    :type k: int
    :rtype: SelectionResult
    """
    policy = Policy(policy)
    if policy is Policy.All:
        return SelectionResult(selected=tuple(req.candidates))
    if k < 1:
        raise ValueError('k must be >= 1')
    ordered = _recency_order(req)
    if policy is Policy.RecentK:
        return SelectionResult(selected=tuple(ordered[:k]))

    buckets = {}
    for c in ordered:
        buckets.setdefault(req.groups.get(c, c.value), []).append(c)
    selected = []
    keys = sorted(buckets)
    while len(selected) < k and any(buckets[g] for g in keys):
        for g in keys:
            if buckets[g] and len(selected) < k:
                selected.append(buckets[g].pop(0))
    return SelectionResult(selected=tuple(selected))


def _fit_candidates(req, generator, prompts):
    """ Drop the oldest candidates until the prompt fits the budget

    :rtype: (SelectionRequest, number of candidates dropped)
    """
    budget = generator.budget.max_context_tokens

    def size(n):
        kept = heuristic_select(req, Policy.RecentK, n).selected
        trimmed = replace(req, candidates=tuple(sorted(kept)))
        return generator.estimate(build_selection_prompt(trimmed, prompts))

    total = len(req.candidates)
    if generator.estimate(build_selection_prompt(req, prompts)) <= budget:
        return req, 0
    low, high = 1, total - 1
    best = 1
    while low <= high:
        middle = (low + high) // 2
        if size(middle) <= budget:
            best = middle
            low = middle + 1
        else:
            high = middle - 1
    kept = heuristic_select(req, Policy.RecentK, best).selected
    cherrypy.log.error(
        msg="%s candidates truncated from %d to %d to fit the budget" %
            (req.stage.value, total, best),
        severity=logging.WARNING,
    )
    return replace(req, candidates=tuple(sorted(kept))), total - best


def select_entities(req, generator, config, prompts=None, instance_id='',
                    fallback=True, fallback_k=10):
    """ Generator-backed selection

    :param req: the selection request
    :type req: SelectionRequest
    :param generator: the gateway
    :type generator: ragflarko.gateway.Gateway
    :param config: generation parameters
    :type config: ragflarko.gateway.GenerationConfig
    :param fallback: on an empty selection, take the min(fallback_k,
        |candidates|) most recent candidates and flag the result
    :type fallback: bool
    :rtype: SelectionResult
    """
    prompted, truncated = _fit_candidates(req, generator, prompts)
    messages = build_selection_prompt(prompted, prompts)
    raw = generator.complete(
        messages, config, instance_id, req.stage.value
        )
    result = parse_selection_response(raw, prompted.candidates)
    if result.dropped_hallucinations:
        cherrypy.log.error(
            msg="%s %s: dropped unknown entities %s" % (
                instance_id, req.stage.value,
                ', '.join(result.dropped_hallucinations)),
            severity=logging.INFO,
        )
    if not result.selected and fallback:
        k = min(fallback_k, len(req.candidates))
        result = replace(
            result,
            selected=heuristic_select(req, Policy.RecentK, k).selected,
            fallback=True,
            )
        cherrypy.log.error(
            msg="%s %s: empty selection, falling back to the %d most"
                " recent entities" % (instance_id, req.stage.value, k),
            severity=logging.WARNING,
        )
    return replace(
        result,
        truncated=truncated,
        prompt_tokens=generator.estimate(messages),
        )


class Selector(object):

    def __init__(self, config, logger, gateway=None, generation=None):
        """ Selector constructor

        :param config: the configuration of the selector
        :type config: dict {'config key': 'value'}
        :param logger: the cherrypy error logger object
        :type logger: python logger
        :param gateway: generator access, for generator-backed selectors
        :type gateway: ragflarko.gateway.Gateway
        :param generation: generation parameters
        :type generation: ragflarko.gateway.GenerationConfig
        """
        self.config = config

    def select(self, req, instance_id=''):
        """ Select entities among the request candidates

        :param req: the selection request
        :type req: SelectionRequest
        :param instance_id: id of the recommendation instance
        :type instance_id: string
        :rtype: SelectionResult
        """
        return heuristic_select(req, Policy.All)

    def info(self):
        """ Describe the selector

        :rtype: a string describing the selector
        """
        return "all candidates"

    def get_param(self, param, default=None):
        """ Get a parameter in config (handle default value)

        :param param: name of the parameter to recover
        :type param: string
        :param default: the default value, raises an exception
            if param is not in configuration and default
            is None (which is the default value).
        :type default: string or None
        :rtype: the value of the parameter or the default value if
            not set in configuration
        """
        if param in self.config:
            return self.config[param]
        elif default is not None:
            return default
        else:
            raise MissingParameter('selector', param)
