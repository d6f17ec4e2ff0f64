# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""Backtest instances, forward-looking targets and Hits@3 scoring."""

import bisect
import json
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, asdict
from datetime import date, timedelta

import cherrypy
import pandas as pd

from ragflarko.exceptions import MissingTargets, EmptyReport, \
    WrongParamValue
from ragflarko.ingest import TxnType, RowError, parse_date
from ragflarko.kg import XSD_DATE
from ragflarko.pipeline import Instance

HIT_MODES = ('binary', 'precision')

# plain literals audited as dates
PLAIN_DATE = re.compile(r'^[0-9]{4}-[0-9]{1,2}-[0-9]{1,2}([ T][0-9:]+)?$')

REPORT_COLUMNS = [
    'variant', 'model', 'n',
    'pref_at_3', 'se_pref',
    'prof_at_3', 'se_prof',
    'comb_at_3', 'se_comb',
]


@dataclass(frozen=True)
class EvalWindow:
    start: date
    end: date
    step_days: int = 14
    horizon_days: int = 180

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError('window start is after its end')
        if self.step_days < 1:
            raise ValueError('step_days must be positive')
        if self.horizon_days < 1:
            raise ValueError('horizon_days must be positive')

    def dates(self):
        ret = []
        day = self.start
        while day <= self.end:
            ret.append(day)
            day += timedelta(days=self.step_days)
        return ret


@dataclass(frozen=True)
class TargetSets:
    purchased: frozenset = frozenset()
    profitable: frozenset = frozenset()

    @property
    def combined(self):
        return self.purchased & self.profitable

    def to_dict(self):
        return {
            'purchased': sorted(self.purchased),
            'profitable': sorted(self.profitable),
            'combined': sorted(self.combined),
        }


@dataclass(frozen=True)
class MetricsReport:
    variant: str
    model: str
    n: int
    pref_at_3: float
    se_pref: float
    prof_at_3: float
    se_prof: float
    comb_at_3: float
    se_comb: float
    mean_prompt_tokens: float = 0.0
    hit_mode: str = 'binary'

    def to_dict(self):
        return asdict(self)


def generate_instances(window, users):
    """ Backtest instances, date-major then user

    :param window: evaluation window
    :type window: EvalWindow
    :param users: user ids
    :type users: list of string
    :rtype: list of Instance
    """
    users = sorted(set(users))
    return [Instance(u, d) for d in window.dates() for u in users]


def purchased_set(records, user, cutoff, horizon_days):
    """ISINs bought by the user in [cutoff, cutoff + horizon_days)"""
    end = cutoff + timedelta(days=horizon_days)
    return set(
        r.isin for r in records
        if r.user_id == user and r.txn_type is TxnType.Buy and
        cutoff <= r.timestamp < end
        )


def profitable_set(prices, cutoff, horizon_days):
    """ ISINs with a strictly positive return over the horizon

    Entry price is the last close before the cutoff, exit price the last
    close in [cutoff, cutoff + horizon_days]. Assets lacking either price
    are left out.

    :param prices: daily closes sorted by date
    :type prices: dict {<isin>: list of PriceBar}
    :rtype: set of ISIN
    """
    end = cutoff + timedelta(days=horizon_days)
    ret = set()
    for isin, series in prices.items():
        days = [b.date for b in series]
        before = bisect.bisect_left(days, cutoff)
        upto = bisect.bisect_right(days, end)
        if before == 0 or upto <= before:
            continue
        p0 = series[before - 1].close
        p1 = series[upto - 1].close
        if p1 / p0 - 1 > 0:
            ret.add(isin)
    return ret


def compute_targets(records, prices, instances, horizon_days):
    """ Target sets of every instance

    :rtype: dict {<instance_id>: TargetSets}
    """
    profitable = {}
    targets = {}
    for inst in instances:
        if inst.cutoff not in profitable:
            profitable[inst.cutoff] = frozenset(
                profitable_set(prices, inst.cutoff, horizon_days)
                )
        targets[inst.instance_id] = TargetSets(
            purchased=frozenset(purchased_set(
                records, inst.user, inst.cutoff, horizon_days)),
            profitable=profitable[inst.cutoff],
            )
    return targets


def hits_at_3(top3, target):
    """1 if any of the recommendations is in the target set, else 0"""
    return 1 if any(isin in target for isin in top3[:3]) else 0


def precision_at_3(top3, target):
    """share of the three recommendation slots found in the target"""
    return len(set(top3[:3]) & set(target)) / 3.0


def _se(p, n):
    return math.sqrt(p * (1 - p) / n)


def score_run(results, targets, hit_mode='binary', active_only=False):
    """ Score recommendation results

    Failed results are left out. Instances with empty targets count in the
    denominator unless active_only is set, which keeps only instances
    where the user bought something during the horizon.

    :param results: pipeline results
    :type results: list of RecommendationResult
    :param targets: target sets by instance id
    :type targets: dict {<instance_id>: TargetSets}
    :param hit_mode: 'binary' (Hits@3) or 'precision' (hits / 3)
    :type hit_mode: string
    :rtype: list of MetricsReport, one per (variant, model), sorted
    """
    if hit_mode not in HIT_MODES:
        raise WrongParamValue('hit_mode', 'eval', HIT_MODES)
    hit = hits_at_3 if hit_mode == 'binary' else precision_at_3
    scored = [r for r in results if r.ok]
    missing = sorted(set(
        r.instance_id for r in scored if r.instance_id not in targets
        ))
    if missing:
        raise MissingTargets(missing)

    groups = defaultdict(list)
    for r in scored:
        t = targets[r.instance_id]
        if active_only and not t.purchased:
            continue
        groups[(r.variant.value, r.model)].append((
            hit(r.top3, t.purchased),
            hit(r.top3, t.profitable),
            hit(r.top3, t.combined),
            r.total_prompt_tokens,
            ))

    reports = []
    for (variant, model) in sorted(groups):
        rows = groups[(variant, model)]
        n = len(rows)
        pref = sum(row[0] for row in rows) / float(n)
        prof = sum(row[1] for row in rows) / float(n)
        comb = sum(row[2] for row in rows) / float(n)
        reports.append(MetricsReport(
            variant=variant,
            model=model,
            n=n,
            pref_at_3=pref,
            se_pref=_se(pref, n),
            prof_at_3=prof,
            se_prof=_se(prof, n),
            comb_at_3=comb,
            se_comb=_se(comb, n),
            mean_prompt_tokens=sum(row[3] for row in rows) / float(n),
            hit_mode=hit_mode,
            ))
        cherrypy.log.error(
            msg="%s/%s: n=%d Pref@3=%.3f Prof@3=%.3f Comb@3=%.3f" %
                (variant, model, n, pref, prof, comb),
            severity=logging.INFO,
        )
    return reports


def _audit_graph(name, graph, cutoff, vocab):
    violations = []
    for t in graph.sorted_triples():
        if t.object.is_iri:
            continue
        try:
            if t.object.datatype == XSD_DATE:
                day = date.fromisoformat(t.object.value)
            elif t.object.datatype is None and \
                    PLAIN_DATE.match(t.object.value):
                day = parse_date(t.object.value)
            else:
                continue
        except (ValueError, RowError):
            kind = 'malformed'
        else:
            if day < cutoff:
                continue
            if vocab is not None and t.predicate == vocab.periodEndDate:
                kind = 'window'
            else:
                kind = 'post-cutoff'
        violations.append({
            'graph': name,
            'kind': kind,
            'subject': t.subject.value,
            'predicate': t.predicate.value,
            'object': t.object.value,
        })
    return violations


def leakage_audit(pkg, mkg, cutoff, vocab=None):
    """ Date literals at or after the cutoff

    :param pkg: personal KG
    :type pkg: Graph
    :param mkg: market KG
    :type mkg: Graph
    :param cutoff: recommendation date
    :type cutoff: date
    :param vocab: tells summary windows ('window' violations) apart
    :type vocab: Vocabulary
    :rtype: dict with the cutoff and the list of violations, each one
        naming its graph, kind ('post-cutoff', 'window', 'malformed')
        and triple
    """
    violations = _audit_graph('pkg', pkg, cutoff, vocab) + \
        _audit_graph('mkg', mkg, cutoff, vocab)
    if violations:
        cherrypy.log.error(
            msg="leakage audit at %s: %d violation(s)" %
                (cutoff.isoformat(), len(violations)),
            severity=logging.ERROR,
        )
    return {'cutoff': cutoff.isoformat(), 'violations': violations}


def emit_report(reports, path, fmt='CSV'):
    """ Write metric reports

    :param reports: scored groups
    :type reports: list of MetricsReport
    :param path: output file
    :type path: string
    :param fmt: 'CSV' or 'JSON'
    :type fmt: string
    """
    if not reports:
        raise EmptyReport()
    ordered = sorted(reports, key=lambda r: (r.variant, r.model))
    fmt = fmt.upper()
    if fmt == 'CSV':
        frame = pd.DataFrame(
            [r.to_dict() for r in ordered], columns=REPORT_COLUMNS
            )
        frame.to_csv(path, index=False, lineterminator='\n')
    elif fmt == 'JSON':
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(
                [r.to_dict() for r in ordered], f,
                sort_keys=True, indent=2,
                )
            f.write('\n')
    else:
        raise WrongParamValue('format', 'report', ['CSV', 'JSON'])
    return path


def read_report(path):
    """reports back from a CSV or JSON report file"""
    if path.endswith('.json'):
        with open(path, 'r', encoding='utf-8') as f:
            return [MetricsReport(**d) for d in json.load(f)]
    frame = pd.read_csv(
        path,
        dtype={'variant': str, 'model': str},
        float_precision='round_trip',
        )
    return [
        MetricsReport(
            variant=row['variant'],
            model=row['model'],
            n=int(row['n']),
            pref_at_3=float(row['pref_at_3']),
            se_pref=float(row['se_pref']),
            prof_at_3=float(row['prof_at_3']),
            se_prof=float(row['se_prof']),
            comb_at_3=float(row['comb_at_3']),
            se_comb=float(row['se_comb']),
            )
        for row in frame.to_dict(orient='records')
        ]
