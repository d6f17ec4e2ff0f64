#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import with_statement

import os
from datetime import date

import cherrypy
import pytest

from ragflarko.gateway import Gateway, ContextBudget, GenerationConfig, \
    ChatMessage, Role
from ragflarko.exceptions import TransportError
from ragflarko.pipeline import Instance, PipelineConfig, PipelineVariant, \
    run_pipeline
from ragflarko.kg import Vocabulary
from ragflarko.ingest import load_transactions, load_prices, load_assets, \
    build_pkg, build_mkg, summarize_all
import ragflarko.backend.backendOpenAI
import ragflarko.selector.llm
from disable import *

vocab = Vocabulary()


def backend(**config):
    return ragflarko.backend.backendOpenAI.Backend(
        config, cherrypy.log.error, 'generator'
        )


class TestError(object):

    def testUnreachableEndpoint(self):
        # nothing listens on the discard port
        config = GenerationConfig(
            endpoint_url='http://127.0.0.1:9/v1',
            timeout=2.0,
            max_retries=1,
            backoff=0.0,
            )
        gw = Gateway(backend(), ContextBudget())
        try:
            gw.complete([ChatMessage(Role.User, 'ping')], config)
        except TransportError as e:
            assert e.attempts == 2
            return
        else:
            raise AssertionError("expected an exception")

    def testSeed(self):
        assert backend(seed=42).seed == 42
        assert backend().seed is None

    @live_disabled
    def testLiveMultiStage(self):
        generation = GenerationConfig(
            endpoint_url=os.environ['FLARKO_LIVE_URL'],
            model_name=os.environ.get('FLARKO_LIVE_MODEL', 'Qwen/Qwen3-1.7B'),
            max_retries=2,
            )
        gw = Gateway(backend(), ContextBudget())
        selector = ragflarko.selector.llm.Selector(
            {}, cherrypy.log.error, gw, generation
            )
        cutoff = date(2021, 6, 1)
        records, _ = load_transactions('./tests/cfg/transactions.csv')
        prices, _ = load_prices('./tests/cfg/prices.csv')
        assets, _ = load_assets('./tests/cfg/assets.csv')
        pkg = build_pkg(records, 'C1', cutoff, vocab)
        mkg = build_mkg(summarize_all(prices, cutoff), assets, cutoff, vocab)
        result = run_pipeline(
            PipelineVariant.MultiStage, Instance('C1', cutoff), pkg, mkg,
            selector, gw, PipelineConfig(vocab=vocab, generation=generation)
            )
        assert result.ok, result.error
        mr_prompt = [
            r for r in gw.audit.records if r['stage'] == 'MR'
            ][0]['messages'][0]['content']
        assert result.ptr.serialized in mr_prompt
        assert len(result.top3) <= 3
        assert set(result.top3) <= set(prices)
