# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""Transaction, price and asset ingestion, and KG construction.

Every graph is built for a cutoff date (the recommendation date): only
facts strictly earlier than the cutoff are emitted.
"""

import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from decimal import Decimal, InvalidOperation
from enum import Enum

import cherrypy
import pandas as pd

from ragflarko.exceptions import MissingColumn
from ragflarko.kg import Graph, Triple, Literal, XSD_DATE, XSD_DECIMAL

ISIN_PATTERN = re.compile(r'^[A-Z]{2}[A-Z0-9]{9}[0-9]$')

WINDOW_DAYS = 70

# date, optionally followed by a time of day
DATE_FORMATS = ('%Y-%m-%d', '%Y-%m-%d %H:%M:%S', '%Y-%m-%dT%H:%M:%S')

# logical field -> default column (FAR-Trans headers)
DEFAULT_COLUMNS = {
    'transactions': {
        'user_id': 'customerID',
        'isin': 'ISIN',
        'txn_type': 'transactionType',
        'value': 'totalValue',
        'timestamp': 'timestamp',
    },
    'prices': {
        'isin': 'ISIN',
        'date': 'timestamp',
        'close': 'closePrice',
    },
    'assets': {
        'isin': 'ISIN',
        'category': 'assetCategory',
        'sector': 'sector',
        'industry': 'industry',
    },
}


class TxnType(Enum):
    Buy = 'Buy'
    Sell = 'Sell'


@dataclass(frozen=True)
class TransactionRecord:
    user_id: str
    isin: str
    txn_type: TxnType
    value: Decimal
    timestamp: date


@dataclass(frozen=True)
class PriceBar:
    isin: str
    date: date
    close: Decimal


@dataclass(frozen=True)
class AssetInfo:
    isin: str
    category: str
    sector: str
    industry: str


@dataclass(frozen=True)
class TenWeekPriceSummary:
    isin: str
    period_start: date
    period_end: date
    high: Decimal
    low: Decimal
    average: Decimal
    end_price: Decimal


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str
    row: dict


@dataclass
class IngestReport:
    """rows rejected and warnings raised while loading or building"""
    rejects: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def warn(self, message):
        self.warnings.append(message)
        cherrypy.log.error(msg=message, severity=logging.WARNING)

    def reject(self, line, reason, row):
        self.rejects.append(Reject(line, reason, row))
        cherrypy.log.error(
            msg="line %d rejected: %s" % (line, reason),
            severity=logging.WARNING,
        )

    def extend(self, other):
        self.rejects.extend(other.rejects)
        self.warnings.extend(other.warnings)

    def to_dict(self):
        return {
            'rejects': [
                {'line': r.line, 'reason': r.reason, 'row': r.row}
                for r in self.rejects
                ],
            'warnings': list(self.warnings),
        }


class ColumnMapping(object):
    """ Names of the CSV columns holding each logical field

    :param kind: 'transactions', 'prices' or 'assets'
    :type kind: string
    :param columns: overrides of the default column names
    :type columns: dict {<field>: <column>}
    """

    def __init__(self, kind, columns=None):
        self.kind = kind
        self.columns = dict(DEFAULT_COLUMNS[kind])
        if columns:
            for name, column in columns.items():
                if name not in self.columns:
                    raise KeyError(name)
                self.columns[name] = column

    def __getitem__(self, name):
        return self.columns[name]

    def check(self, header):
        for name in sorted(self.columns):
            if self.columns[name] not in header:
                raise MissingColumn(self.columns[name], self.kind)


class RowError(Exception):
    def __init__(self, reason):
        self.reason = reason


def parse_date(value):
    """ISO-8601 date, unpadded fields accepted ('2020-3-27')"""
    value = str(value).strip()
    for fmt in DATE_FORMATS:
        try:
            return datetime.strptime(value, fmt).date()
        except ValueError:
            pass
    raise RowError('unparseable date')


def parse_positive(value, what):
    # unicode minus sign from spreadsheets
    value = str(value).strip().replace('−', '-')
    try:
        number = Decimal(value)
    except InvalidOperation:
        raise RowError('unparseable ' + what)
    if not number.is_finite():
        raise RowError('unparseable ' + what)
    if number <= 0:
        raise RowError('non-positive ' + what)
    return number


def parse_isin(value):
    value = str(value).strip().upper()
    if not ISIN_PATTERN.match(value):
        raise RowError('invalid ISIN')
    return value


def parse_txn_type(value):
    value = str(value).strip().lower()
    if value in ('buy', 'b'):
        return TxnType.Buy
    if value in ('sell', 's'):
        return TxnType.Sell
    raise RowError('unknown transaction type')


def _read_csv(source, mapping):
    frame = pd.read_csv(
        source,
        dtype=str,
        keep_default_na=False,
        encoding='utf-8',
        )
    mapping.check(set(frame.columns))
    return frame


def _rows(frame):
    # line 1 is the header
    for line, row in enumerate(frame.to_dict(orient='records'), start=2):
        yield line, row


def load_transactions(source, mapping=None):
    """ Load and validate transactions

    :param source: CSV file (path or binary stream) with a header row
    :param mapping: column mapping, FAR-Trans headers by default
    :type mapping: ColumnMapping
    :rtype: (list of TransactionRecord, IngestReport)
    """
    mapping = mapping or ColumnMapping('transactions')
    frame = _read_csv(source, mapping)
    report = IngestReport()
    records = []
    for line, row in _rows(frame):
        try:
            user_id = str(row[mapping['user_id']]).strip()
            if not user_id:
                raise RowError('empty user id')
            records.append(TransactionRecord(
                user_id=user_id,
                isin=parse_isin(row[mapping['isin']]),
                txn_type=parse_txn_type(row[mapping['txn_type']]),
                value=parse_positive(row[mapping['value']], 'value'),
                timestamp=parse_date(row[mapping['timestamp']]),
                ))
        except RowError as e:
            report.reject(line, e.reason, row)
    cherrypy.log.error(
        msg="%d transaction(s) loaded, %d rejected" %
            (len(records), len(report.rejects)),
        severity=logging.INFO,
    )
    return records, report


def load_prices(source, mapping=None):
    """ Load and validate daily closes

    Series are sorted by date; for a duplicated (isin, date) the last
    occurrence wins and a warning is recorded.

    :rtype: (dict {<isin>: list of PriceBar}, IngestReport)
    """
    mapping = mapping or ColumnMapping('prices')
    frame = _read_csv(source, mapping)
    report = IngestReport()
    bars = defaultdict(dict)
    for line, row in _rows(frame):
        try:
            isin = parse_isin(row[mapping['isin']])
            day = parse_date(row[mapping['date']])
            close = parse_positive(row[mapping['close']], 'close')
        except RowError as e:
            report.reject(line, e.reason, row)
            continue
        if day in bars[isin]:
            report.warn(
                "duplicate price for '%s' on %s (line %d), keeping the last"
                % (isin, day.isoformat(), line)
                )
        bars[isin][day] = PriceBar(isin, day, close)
    series = dict(
        (isin, [by_day[d] for d in sorted(by_day)])
        for isin, by_day in bars.items()
        )
    return series, report


def load_assets(source, mapping=None):
    """ Load asset metadata

    :rtype: (list of AssetInfo, IngestReport)
    """
    mapping = mapping or ColumnMapping('assets')
    frame = _read_csv(source, mapping)
    report = IngestReport()
    assets = {}
    for line, row in _rows(frame):
        try:
            isin = parse_isin(row[mapping['isin']])
        except RowError as e:
            report.reject(line, e.reason, row)
            continue
        if isin in assets:
            report.warn(
                "duplicate metadata for '%s' (line %d), keeping the last"
                % (isin, line)
                )
        assets[isin] = AssetInfo(
            isin=isin,
            category=str(row[mapping['category']]).strip(),
            sector=str(row[mapping['sector']]).strip(),
            industry=str(row[mapping['industry']]).strip(),
            )
    return [assets[i] for i in sorted(assets)], report


def summarize_prices(series, cutoff):
    """ Aggregate closes into ten-week summaries

    Windows of 70 days are anchored backward from the cutoff: the latest
    one ends the day before the cutoff. Bars on or after the cutoff are
    ignored and empty windows are omitted.

    :param series: bars of one asset, sorted by date
    :type series: list of PriceBar
    :param cutoff: recommendation date
    :type cutoff: date
    :rtype: list of TenWeekPriceSummary, oldest first
    """
    last_day = cutoff - timedelta(days=1)
    windows = defaultdict(list)
    for bar in series:
        if bar.date >= cutoff:
            continue
        windows[(last_day - bar.date).days // WINDOW_DAYS].append(bar)
    summaries = []
    for index in sorted(windows, reverse=True):
        bars = windows[index]
        closes = [b.close for b in bars]
        period_end = last_day - timedelta(days=index * WINDOW_DAYS)
        summaries.append(TenWeekPriceSummary(
            isin=bars[0].isin,
            period_start=period_end - timedelta(days=WINDOW_DAYS - 1),
            period_end=period_end,
            high=max(closes),
            low=min(closes),
            average=sum(closes) / Decimal(len(closes)),
            end_price=max(bars, key=lambda b: b.date).close,
            ))
    return summaries


def decimal_literal(value):
    return Literal(format(value, 'f'), XSD_DECIMAL)


def date_literal(value):
    return Literal(value.isoformat(), XSD_DATE)


def build_pkg(records, user, cutoff, vocab):
    """ Personal transaction KG of a user

    :param records: validated transactions of all users
    :type records: list of TransactionRecord
    :param user: user id
    :type user: string
    :param cutoff: only transactions strictly before it are emitted
    :type cutoff: date
    :param vocab: vocabulary
    :type vocab: Vocabulary
    :rtype: Graph
    """
    kept = [
        r for r in records
        if r.user_id == user and r.timestamp < cutoff
        ]
    kept.sort(key=lambda r: (
        r.timestamp, r.isin, r.txn_type.value, r.value
        ))
    graph = Graph()
    for k, r in enumerate(kept, start=1):
        txn = vocab.entity('Transaction_%d' % k)
        graph.add(Triple(txn, vocab.hasParticipant, Literal(r.user_id)))
        graph.add(Triple(txn, vocab.involvesSecurity, Literal(r.isin)))
        graph.add(Triple(txn, vocab.transactionValue,
                         decimal_literal(r.value)))
        graph.add(Triple(txn, vocab.transactionTimestamp,
                         date_literal(r.timestamp)))
        graph.add(Triple(txn, vocab.type,
                         vocab.classes[r.txn_type.value + 'Transaction']))
        graph.add(Triple(txn, vocab.type, vocab.classes['Transaction']))
    cherrypy.log.error(
        msg="PKG of '%s' at %s: %d transaction(s), %d triple(s)" %
            (user, cutoff.isoformat(), len(kept), len(graph)),
        severity=logging.DEBUG,
    )
    return graph


def build_mkg(summaries, assets, cutoff, vocab, report=None):
    """ Market KG: assets with their metadata and price summaries

    :param summaries: summaries computed at the same cutoff
    :type summaries: dict {<isin>: list of TenWeekPriceSummary}
    :param assets: asset metadata
    :type assets: list of AssetInfo
    :param cutoff: recommendation date
    :type cutoff: date
    :param vocab: vocabulary
    :type vocab: Vocabulary
    :param report: collects a warning per asset lacking metadata
    :type report: IngestReport
    :rtype: Graph
    """
    report = report if report is not None else IngestReport()
    infos = dict((a.isin, a) for a in assets)
    isins = sorted(set(infos) | set(i for i in summaries if summaries[i]))
    graph = Graph()
    asset_nodes = {}
    for k, isin in enumerate(isins, start=1):
        node = vocab.entity('Asset_%d' % k)
        asset_nodes[isin] = node
        graph.add(Triple(node, vocab.identifier, Literal(isin)))
        info = infos.get(isin)
        if info is None:
            report.warn(
                "no metadata for asset '%s', identifier only" % isin
                )
            continue
        graph.add(Triple(node, vocab.category, Literal(info.category)))
        graph.add(Triple(node, vocab.sector, Literal(info.sector)))
        graph.add(Triple(node, vocab.industry, Literal(info.industry)))

    ordered = sorted(
        (s for isin in summaries for s in summaries[isin]
         if s.period_end < cutoff),
        key=lambda s: (s.isin, s.period_end),
        )
    summary_class = vocab.classes['TenWeekPriceSummary']
    for k, s in enumerate(ordered, start=1):
        node = vocab.entity('TenWeekPriceSummary_%d' % k)
        graph.add(Triple(node, vocab.type, summary_class))
        graph.add(Triple(node, vocab.periodHighPrice,
                         decimal_literal(s.high)))
        graph.add(Triple(node, vocab.periodLowPrice,
                         decimal_literal(s.low)))
        graph.add(Triple(node, vocab.periodAveragePrice,
                         decimal_literal(s.average)))
        graph.add(Triple(node, vocab.periodEndPrice,
                         decimal_literal(s.end_price)))
        graph.add(Triple(node, vocab.periodEndDate,
                         date_literal(s.period_end)))
        graph.add(Triple(node, vocab.priceOf, asset_nodes[s.isin]))
    cherrypy.log.error(
        msg="MKG at %s: %d asset(s), %d summary(ies), %d triple(s)" %
            (cutoff.isoformat(), len(isins), len(ordered), len(graph)),
        severity=logging.DEBUG,
    )
    return graph


def summarize_all(prices, cutoff):
    """summaries of every series at a cutoff, {<isin>: [summary]}"""
    return dict(
        (isin, summarize_prices(series, cutoff))
        for isin, series in sorted(prices.items())
        )
