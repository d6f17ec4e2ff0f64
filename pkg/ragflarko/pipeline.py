# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""Recommendation pipeline.

Three variants share the final generation step:

* FullInjection: both complete graphs are serialized into the prompt.
* Parallel: PTR and MR select entities independently.
* MultiStage: MR sees the subgraph retrieved by PTR.
"""

import logging
import re
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

import cherrypy

from ragflarko.exceptions import RagFlarkoError
from ragflarko.gateway import ChatMessage, Role, ContextBudget, \
    GenerationConfig, estimate_tokens
from ragflarko.kg import Graph, Vocabulary, extract_subgraph, \
    list_entities, serialize_jsonld
from ragflarko.prompts import get_prompts
from ragflarko.selector import SelectionRequest, Stage

ISIN_TOKEN = re.compile(r'(?<![A-Z0-9])[A-Z]{2}[A-Z0-9]{9}[0-9](?![A-Z0-9])')

FORMAT_INSTRUCTIONS = {
    'v1': "List exactly three ISINs, one per line, most recommended first.",
}

DEFAULT_REQUEST = \
    "Recommend financial assets for this investor to buy, in line with" \
    " their past transactions and with recent market performance."


class PipelineVariant(Enum):
    FullInjection = 'FullInjection'
    Parallel = 'Parallel'
    MultiStage = 'MultiStage'


@dataclass(frozen=True)
class Instance:
    """one backtest unit: a user at a recommendation date"""
    user: str
    cutoff: date

    @property
    def instance_id(self):
        return '%s@%s' % (self.user, self.cutoff.isoformat())


@dataclass(frozen=True)
class PipelineConfig:
    vocab: Vocabulary = field(default_factory=Vocabulary)
    request: str = DEFAULT_REQUEST
    format_version: str = 'v1'
    # add the attribute triples of the assets linked to MR summaries
    asset_completion: bool = True
    budget: ContextBudget = field(default_factory=ContextBudget)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    prompts: object = None

    def instruction(self):
        return FORMAT_INSTRUCTIONS[self.format_version]

    def templates(self):
        return self.prompts or get_prompts()


@dataclass(frozen=True)
class StageResult:
    stage: Stage
    selected: tuple
    subgraph: Graph
    serialized: str
    prompt_tokens_estimate: int = 0
    # extraction nodes, selected entities plus completed assets
    nodes: tuple = ()
    fallback: bool = False
    dropped_hallucinations: tuple = ()
    truncated: int = 0

    def to_dict(self):
        return {
            'stage': self.stage.value,
            'selected': [t.value for t in self.selected],
            'nodes': [t.value for t in self.nodes],
            'triples': len(self.subgraph),
            'serialized': self.serialized,
            'prompt_tokens_estimate': self.prompt_tokens_estimate,
            'fallback': self.fallback,
            'dropped_hallucinations': list(self.dropped_hallucinations),
            'truncated': self.truncated,
        }


@dataclass(frozen=True)
class RecommendationResult:
    instance_id: str
    variant: PipelineVariant
    top3: tuple = ()
    raw_generation: str = ''
    ptr: StageResult = None
    mr: StageResult = None
    total_prompt_tokens: int = 0
    user: str = ''
    cutoff: date = None
    model: str = ''
    status: str = 'ok'
    error: str = None
    # entities dropped from a full injection to fit the budget
    truncated: tuple = ()

    @property
    def key(self):
        return (self.instance_id, self.variant.value)

    @property
    def ok(self):
        return self.status == 'ok'

    def to_dict(self):
        return {
            'instance_id': self.instance_id,
            'user': self.user,
            'cutoff': self.cutoff.isoformat() if self.cutoff else None,
            'variant': self.variant.value,
            'model': self.model,
            'status': self.status,
            'error': self.error,
            'top3': list(self.top3),
            'raw_generation': self.raw_generation,
            'total_prompt_tokens': self.total_prompt_tokens,
            'truncated': list(self.truncated),
            'ptr': self.ptr.to_dict() if self.ptr else None,
            'mr': self.mr.to_dict() if self.mr else None,
        }

    @classmethod
    def from_dict(cls, d):
        """result read back from a results file (stage details dropped)"""
        cutoff = d.get('cutoff')
        return cls(
            instance_id=d['instance_id'],
            variant=PipelineVariant(d['variant']),
            top3=tuple(d.get('top3') or ()),
            raw_generation=d.get('raw_generation') or '',
            total_prompt_tokens=int(d.get('total_prompt_tokens') or 0),
            user=d.get('user') or '',
            cutoff=date.fromisoformat(cutoff) if cutoff else None,
            model=d.get('model') or '',
            status=d.get('status') or 'ok',
            error=d.get('error'),
            truncated=tuple(d.get('truncated') or ()),
            )


def _literal_date(graph, node, predicate):
    term = graph.value_of(node, predicate)
    if term is None:
        return None
    try:
        return date.fromisoformat(term.value)
    except ValueError:
        return None


def _empty_stage(stage, vocab):
    empty = Graph()
    return StageResult(stage, (), empty, serialize_jsonld(empty, vocab))


def run_ptr(request, pkg, selector, config, instance_id=''):
    """ Personal transaction retrieval

    :param request: the user request
    :type request: string
    :param pkg: personal KG built at the instance cutoff
    :type pkg: Graph
    :param selector: entity selector
    :type selector: ragflarko.selector.Selector
    :param config: pipeline settings
    :type config: PipelineConfig
    :rtype: StageResult, empty for a user without transactions
    """
    vocab = config.vocab
    candidates = list_entities(pkg, vocab.classes['Transaction'], vocab)
    if not candidates:
        return _empty_stage(Stage.PTR, vocab)
    req = SelectionRequest(
        user_request=request,
        candidates=tuple(candidates),
        stage=Stage.PTR,
        dates=dict(
            (c, _literal_date(pkg, c, vocab.transactionTimestamp))
            for c in candidates
            ),
        groups=dict(
            (c, getattr(pkg.value_of(c, vocab.involvesSecurity), 'value',
                        c.value))
            for c in candidates
            ),
        )
    selection = selector.select(req, instance_id)
    subgraph = extract_subgraph(pkg, selection.selected)
    return StageResult(
        stage=Stage.PTR,
        selected=tuple(selection.selected),
        subgraph=subgraph,
        serialized=serialize_jsonld(subgraph, vocab),
        prompt_tokens_estimate=selection.prompt_tokens,
        nodes=tuple(selection.selected),
        fallback=selection.fallback,
        dropped_hallucinations=selection.dropped_hallucinations,
        truncated=selection.truncated,
        )


def run_mr(request, mkg, prior, selector, config, instance_id=''):
    """ Market retrieval

    :param request: the user request
    :type request: string
    :param mkg: market KG built at the instance cutoff
    :type mkg: Graph
    :param prior: PTR result (multi-stage), None (parallel)
    :type prior: StageResult
    :param selector: entity selector
    :type selector: ragflarko.selector.Selector
    :param config: pipeline settings
    :type config: PipelineConfig
    :rtype: StageResult
    """
    vocab = config.vocab
    candidates = list_entities(
        mkg, vocab.classes['TenWeekPriceSummary'], vocab
        )
    if not candidates:
        return _empty_stage(Stage.MR, vocab)
    req = SelectionRequest(
        user_request=request,
        candidates=tuple(candidates),
        stage=Stage.MR,
        prior_context=prior.serialized if prior is not None else None,
        dates=dict(
            (c, _literal_date(mkg, c, vocab.periodEndDate))
            for c in candidates
            ),
        groups=dict(
            (c, getattr(mkg.value_of(c, vocab.priceOf), 'value', c.value))
            for c in candidates
            ),
        )
    selection = selector.select(req, instance_id)
    subgraph = extract_subgraph(mkg, selection.selected)
    nodes = list(selection.selected)
    if config.asset_completion:
        assets = sorted(set(
            a for s in selection.selected
            for a in mkg.objects_of(s, vocab.priceOf)
            ))
        for asset in assets:
            # attributes only, other summaries of the asset stay out
            for t in mkg.by_subject(asset):
                subgraph.add(t)
        nodes.extend(a for a in assets if a not in nodes)
    return StageResult(
        stage=Stage.MR,
        selected=tuple(selection.selected),
        subgraph=subgraph,
        serialized=serialize_jsonld(subgraph, vocab),
        prompt_tokens_estimate=selection.prompt_tokens,
        nodes=tuple(nodes),
        fallback=selection.fallback,
        dropped_hallucinations=selection.dropped_hallucinations,
        truncated=selection.truncated,
        )


def _generation_messages(request, pkg_text, mkg_text, config):
    prompts = config.templates()
    return [
        ChatMessage(Role.System, prompts.render(
            'generation_pkg.mako', graph_text=pkg_text)),
        ChatMessage(Role.System, prompts.render(
            'generation_mkg.mako', graph_text=mkg_text)),
        ChatMessage(Role.User, prompts.render(
            'generation_user.mako',
            request=request,
            instruction=config.instruction())),
    ]


def _without(graph, entity):
    return Graph(t for t in graph.triples() if t.subject != entity)


def truncate_full_graphs(request, pkg, mkg, config):
    """ Drop the oldest entities of full graphs until the prompt fits

    At each step the oldest transaction or summary of the graph with the
    longer serialization is removed.

    :rtype: (Graph, Graph, list of dropped entity IRIs)
    """
    vocab = config.vocab

    def oldest_first(graph, cls, predicate):
        return sorted(
            list_entities(graph, vocab.classes[cls], vocab),
            key=lambda e: (_literal_date(graph, e, predicate) or date.min,
                           e.value),
            )

    pools = {
        'pkg': oldest_first(pkg, 'Transaction', vocab.transactionTimestamp),
        'mkg': oldest_first(mkg, 'TenWeekPriceSummary', vocab.periodEndDate),
    }
    graphs = {'pkg': pkg, 'mkg': mkg}
    texts = dict(
        (k, serialize_jsonld(g, vocab)) for k, g in graphs.items()
        )
    dropped = []
    while estimate_tokens(
            _generation_messages(request, texts['pkg'], texts['mkg'],
                                 config),
            config.budget) > config.budget.max_context_tokens:
        candidates = [k for k in ('pkg', 'mkg') if pools[k]]
        if not candidates:
            break
        side = max(candidates, key=lambda k: (len(texts[k]), k))
        entity = pools[side].pop(0)
        graphs[side] = _without(graphs[side], entity)
        texts[side] = serialize_jsonld(graphs[side], vocab)
        dropped.append(entity.value)
    if dropped:
        cherrypy.log.error(
            msg="full injection truncated, %d entities dropped" %
                len(dropped),
            severity=logging.WARNING,
        )
    return graphs['pkg'], graphs['mkg'], dropped


def assemble_generation_prompt(request, ptr=None, mr=None, full_graphs=None,
                               config=None, truncate=True):
    """ Final recommendation prompt

    :param request: the user request
    :type request: string
    :param ptr: retrieved personal subgraph (retrieval variants)
    :type ptr: StageResult
    :param mr: retrieved market subgraph (retrieval variants)
    :type mr: StageResult
    :param full_graphs: (pkg, mkg) for the full injection, truncated to
        the budget
    :type full_graphs: (Graph, Graph)
    :param config: pipeline settings
    :type config: PipelineConfig
    :param truncate: False when full_graphs already fit the budget
    :type truncate: bool
    :rtype: list of ChatMessage: PKG context, MKG context, request
    """
    config = config or PipelineConfig()
    retrieved = ptr is not None or mr is not None
    if retrieved == (full_graphs is not None):
        raise ValueError('either stage results or full graphs are needed')
    vocab = config.vocab
    if full_graphs is not None:
        pkg, mkg = full_graphs
        if truncate:
            pkg, mkg, _ = truncate_full_graphs(request, pkg, mkg, config)
        pkg_text = serialize_jsonld(pkg, vocab)
        mkg_text = serialize_jsonld(mkg, vocab)
    else:
        ptr = ptr or _empty_stage(Stage.PTR, vocab)
        mr = mr or _empty_stage(Stage.MR, vocab)
        pkg_text = ptr.serialized
        mkg_text = mr.serialized
    return _generation_messages(request, pkg_text, mkg_text, config)


def parse_recommendations(raw, known_assets):
    """ ISINs recommended in a free-form answer

    :param raw: the generator answer
    :type raw: string
    :param known_assets: ISINs of the market KG
    :type known_assets: set of string
    :rtype: list of at most 3 distinct known ISINs, in order of appearance
    """
    ret = []
    for isin in ISIN_TOKEN.findall(raw or ''):
        if isin in known_assets and isin not in ret:
            ret.append(isin)
        if len(ret) == 3:
            break
    return ret


def known_assets(mkg, vocab):
    return set(
        t.object.value for t in mkg.triples()
        if t.predicate == vocab.identifier
        )


def _handle_exception(instance_id, e):
    if hasattr(e, 'log'):
        msg = e.log
    else:
        msg = "uncaught exception: [%(e)s]" % {'e': str(e)}
    cherrypy.log.error(
        msg="%s failed: %s" % (instance_id, msg),
        severity=logging.ERROR,
    )
    cherrypy.log.error(
        msg=traceback.format_exc(),
        severity=logging.DEBUG,
    )
    return msg


def run_pipeline(variant, instance, pkg, mkg, selector, generator, config):
    """ Recommend three assets for an instance

    :param variant: pipeline variant
    :type variant: PipelineVariant
    :param instance: the user and cutoff
    :type instance: Instance
    :param pkg: personal KG built at the cutoff
    :type pkg: Graph
    :param mkg: market KG built at the cutoff
    :type mkg: Graph
    :param selector: entity selector of both stages
    :type selector: ragflarko.selector.Selector
    :param generator: the gateway
    :type generator: ragflarko.gateway.Gateway
    :param config: pipeline settings
    :type config: PipelineConfig
    :rtype: RecommendationResult, with status 'failed' and the error
        message when a stage or the generation failed
    """
    variant = PipelineVariant(variant)
    instance_id = instance.instance_id
    # scripts, cursors and audit records are per variant run
    call_id = '%s/%s' % (instance_id, variant.value)
    request = config.request
    base = dict(
        instance_id=instance_id,
        variant=variant,
        user=instance.user,
        cutoff=instance.cutoff,
        model=config.generation.model_name,
        )
    ptr = mr = None
    dropped = []
    try:
        if variant is PipelineVariant.FullInjection:
            pkg_kept, mkg_kept, dropped = truncate_full_graphs(
                request, pkg, mkg, config
                )
            messages = assemble_generation_prompt(
                request, full_graphs=(pkg_kept, mkg_kept), config=config,
                truncate=False,
                )
        else:
            if variant is PipelineVariant.Parallel:
                with ThreadPoolExecutor(max_workers=2) as pool:
                    ptr_job = pool.submit(
                        run_ptr, request, pkg, selector, config, call_id
                        )
                    mr_job = pool.submit(
                        run_mr, request, mkg, None, selector, config,
                        call_id
                        )
                    ptr = ptr_job.result()
                    mr = mr_job.result()
            else:
                ptr = run_ptr(request, pkg, selector, config, call_id)
                mr = run_mr(request, mkg, ptr, selector, config, call_id)
            messages = assemble_generation_prompt(
                request, ptr=ptr, mr=mr, config=config
                )
        tokens = estimate_tokens(messages, config.budget)
        raw = generator.complete(
            messages, config.generation, call_id, 'generation'
            )
    except Exception as e:
        if not isinstance(e, RagFlarkoError):
            cherrypy.log.error(
                msg="unexpected error in %s" % instance_id,
                severity=logging.ERROR,
            )
        return RecommendationResult(
            status='failed',
            error=_handle_exception(instance_id, e),
            ptr=ptr,
            mr=mr,
            truncated=tuple(dropped),
            **base
            )
    top3 = parse_recommendations(raw, known_assets(mkg, config.vocab))
    cherrypy.log.error(
        msg="%s %s: %s" % (instance_id, variant.value, ', '.join(top3)),
        severity=logging.DEBUG,
    )
    return RecommendationResult(
        top3=tuple(top3),
        raw_generation=raw,
        ptr=ptr,
        mr=mr,
        total_prompt_tokens=tokens,
        truncated=tuple(dropped),
        **base
        )
