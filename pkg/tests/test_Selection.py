#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import with_statement

import random
import string
from datetime import date, timedelta

import cherrypy
import pytest

from ragflarko.selector import *
from ragflarko.kg import IRI, Vocabulary
from ragflarko.gateway import Gateway, ContextBudget, GenerationConfig
from ragflarko.exceptions import EmptyCandidates, WrongParamValue
import ragflarko.backend.backendMock
import ragflarko.selector.llm
import ragflarko.selector.heuristic

vocab = Vocabulary()
fast = GenerationConfig(model_name='mock', max_retries=0, backoff=0.0)


def txns(n, start=date(2020, 1, 1)):
    candidates = tuple(vocab.entity('Transaction_%d' % i) for i in range(n))
    dates = dict(
        (c, start + timedelta(days=i)) for i, c in enumerate(candidates)
        )
    return candidates, dates


def request(n=10, stage=Stage.PTR, prior=None, groups=None):
    candidates, dates = txns(n)
    return SelectionRequest(
        user_request='recommend three assets',
        candidates=candidates,
        stage=stage,
        prior_context=prior,
        dates=dates,
        groups=groups or {},
        )


def gateway(budget=32768, **config):
    backend = ragflarko.backend.backendMock.Backend(
        config, cherrypy.log.error, 'generator'
        )
    return Gateway(backend, ContextBudget(max_context_tokens=budget))


class TestError(object):

    def testPromptCandidates(self):
        req = request(3)
        messages = build_selection_prompt(req)
        assert len(messages) == 2
        lines = messages[1].content.splitlines()
        assert lines[0] == 'recommend three assets'
        assert lines[-3:] == [c.value for c in req.candidates]
        assert 'transactions' in messages[0].content
        assert 'Context retrieved' not in messages[0].content

    def testPromptPriorContext(self):
        req = request(3, stage=Stage.MR, prior='{"@graph": ["PKGCTX"]}')
        system = build_selection_prompt(req)[0].content
        assert '{"@graph": ["PKGCTX"]}' in system
        assert 'ten-week price summaries' in system

    def testEmptyCandidates(self):
        req = SelectionRequest('recommend', (), Stage.MR)
        try:
            build_selection_prompt(req)
        except EmptyCandidates as e:
            assert e.stage == 'MR'
            return
        else:
            raise AssertionError("expected an exception")

    def testParseExample(self):
        candidates = [vocab.entity('Transaction_3'),
                      vocab.entity('Transaction_7')]
        raw = 'urn:flarko:Transaction_3\n' \
            'urn:flarko:Transaction_7\n' \
            'urn:flarko:Transaction_99'
        result = parse_selection_response(raw, candidates)
        assert result.selected == tuple(candidates)
        assert result.dropped_hallucinations == \
            ('urn:flarko:Transaction_99',)

    def testParseLocalNames(self):
        candidates = [vocab.entity('Transaction_3'),
                      vocab.entity('Transaction_7')]
        raw = 'The relevant ones are Transaction_7, and *Transaction_3*.'
        result = parse_selection_response(raw, candidates)
        assert result.selected == (candidates[1], candidates[0])

    def testParseRepeated(self):
        candidates = [vocab.entity('Transaction_3')]
        raw = 'Transaction_3 Transaction_3 <urn:flarko:Transaction_3>'
        result = parse_selection_response(raw, candidates)
        assert result.selected == (candidates[0],)

    def testParseNothing(self):
        candidates, _ = txns(5)
        for raw in ('', None, 'no relevant transactions', '\n\n'):
            result = parse_selection_response(raw, candidates)
            assert result.selected == ()
            assert result.dropped_hallucinations == ()

    def testParseFuzz(self):
        rng = random.Random(8)
        candidates, _ = txns(20)
        alphabet = string.printable + 'éü€'
        for _ in range(500):
            pieces = []
            for _ in range(rng.randint(0, 10)):
                if rng.random() < 0.3:
                    pieces.append(rng.choice(candidates).value)
                else:
                    pieces.append(''.join(
                        rng.choice(alphabet)
                        for _ in range(rng.randint(0, 30))))
            result = parse_selection_response(' '.join(pieces), candidates)
            assert set(result.selected) <= set(candidates)
            assert len(set(result.selected)) == len(result.selected)

    def testScriptedOracle(self):
        rng = random.Random(100)
        for i in range(100):
            req = request(rng.randint(1, 30))
            picked = rng.sample(
                req.candidates, rng.randint(0, len(req.candidates))
                )
            fakes = ['urn:flarko:Transaction_%d' % (1000 + j)
                     for j in range(rng.randint(0, 3))]
            answer = [c.value for c in picked] + fakes
            rng.shuffle(answer)
            gw = gateway(script=['\n'.join(answer)])
            result = select_entities(req, gw, fast, fallback=False,
                                     instance_id='i%d' % i)
            expected = [
                t for t in (
                    next((c for c in picked if c.value == a), None)
                    for a in answer
                    )
                if t is not None
                ]
            assert list(result.selected) == expected
            assert set(result.dropped_hallucinations) == set(fakes)
            assert not result.fallback

    def testFallback(self):
        req = request(15)
        gw = gateway(script=['nothing relevant here'])
        result = select_entities(req, gw, fast)
        assert result.fallback
        assert result.selected == \
            heuristic_select(req, Policy.RecentK, 10).selected
        assert result.selected[0].value == 'urn:flarko:Transaction_14'

    def testFallbackSmall(self):
        req = request(4)
        gw = gateway(script=['none'])
        result = select_entities(req, gw, fast, fallback_k=10)
        assert len(result.selected) == 4

    def testNoFallback(self):
        req = request(15)
        gw = gateway(script=['none'])
        result = select_entities(req, gw, fast, fallback=False)
        assert result.selected == ()
        assert not result.fallback

    def testEchoMode(self):
        req = request(6)
        gw = gateway(select_k=2)
        result = select_entities(req, gw, fast)
        assert result.selected == req.candidates[:2]
        assert result.prompt_tokens > 0

    def testTruncation(self):
        req = request(100)
        gw = gateway(budget=300, select_k=3)
        result = select_entities(req, gw, fast)
        assert result.truncated > 0
        kept = 100 - result.truncated
        recent = set(req.candidates[-kept:])
        assert set(result.selected) <= recent
        assert result.prompt_tokens <= 300
        assert gw.backend.calls == 1

    def testNoTruncation(self):
        req = request(5)
        result = select_entities(req, gateway(), fast)
        assert result.truncated == 0

    def testAll(self):
        req = request(7)
        assert heuristic_select(req, Policy.All).selected == req.candidates

    def testRecentK(self):
        req = request(7)
        selected = heuristic_select(req, Policy.RecentK, 3).selected
        assert [c.local_name() for c in selected] == \
            ['Transaction_6', 'Transaction_5', 'Transaction_4']

    def testRecentKTies(self):
        candidates, _ = txns(4)
        same = dict((c, date(2020, 1, 1)) for c in candidates)
        req = SelectionRequest('r', candidates, Stage.PTR, dates=same)
        selected = heuristic_select(req, Policy.RecentK, 2).selected
        assert selected == tuple(sorted(candidates)[:2])

    def testRecentKOversized(self):
        req = request(3)
        assert len(heuristic_select(req, Policy.RecentK, 10).selected) == 3

    def testRoundRobinK(self):
        candidates, _ = txns(6)
        groups = dict(
            (c, 'ISIN%d' % (i % 2)) for i, c in enumerate(candidates)
            )
        req = request(6, groups=groups)
        selected = heuristic_select(req, Policy.RoundRobinK, 4).selected
        assert [c.local_name() for c in selected] == [
            'Transaction_4', 'Transaction_5',
            'Transaction_2', 'Transaction_3',
        ]

    def testWrongK(self):
        try:
            heuristic_select(request(3), Policy.RecentK, 0)
        except ValueError:
            return
        else:
            raise AssertionError("expected an exception")

    def testHeuristicPlugin(self):
        sel = ragflarko.selector.heuristic.Selector(
            {'policy': 'RecentK', 'k': '2'}, cherrypy.log.error
            )
        assert len(sel.select(request(5)).selected) == 2
        assert sel.info() == 'RecentK with k=2'

    def testHeuristicPluginWrongPolicy(self):
        try:
            ragflarko.selector.heuristic.Selector(
                {'policy': 'Everything'}, cherrypy.log.error
                )
        except WrongParamValue as e:
            assert e.param == 'policy'
            return
        else:
            raise AssertionError("expected an exception")

    def testLlmPluginNeedsGateway(self):
        try:
            ragflarko.selector.llm.Selector({}, cherrypy.log.error)
        except ValueError:
            return
        else:
            raise AssertionError("expected an exception")

    def testLlmPlugin(self):
        gw = gateway(script=['urn:flarko:Transaction_1'])
        sel = ragflarko.selector.llm.Selector(
            {'fallback_k': 3}, cherrypy.log.error, gw, fast
            )
        assert sel.select(request(5), 'u@2020-02-01').selected == \
            (vocab.entity('Transaction_1'),)
        assert 'mock' in sel.info()
        assert gw.audit.records[0]['stage'] == 'PTR'
        assert gw.audit.records[0]['instance_id'] == 'u@2020-02-01'
