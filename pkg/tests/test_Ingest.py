#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import with_statement

import io
import json
import random
from datetime import date, timedelta
from decimal import Decimal

import pytest

from ragflarko.ingest import *
from ragflarko.exceptions import MissingColumn
from ragflarko.kg import Vocabulary, Triple, Literal, list_entities, \
    serialize_jsonld, XSD_DATE, XSD_DECIMAL

vocab = Vocabulary()

TXN_HEADER = "customerID,ISIN,transactionType,totalValue,timestamp\n"
PRICE_HEADER = "ISIN,timestamp,closePrice\n"

ISINS = ['GRS434003000', 'GRS495003006', 'US0378331005', 'DE0005557508',
         'FR0000131104']


def fig3a_record():
    records, report = load_transactions(io.StringIO(
        TXN_HEADER +
        "00017496858921195E5A,GRS434003000,Sell,11000,2020-3-27\n"
    ))
    assert report.rejects == []
    return records


def daily_series(isin, first_day, closes):
    return [
        PriceBar(isin, first_day + timedelta(days=i), Decimal(c))
        for i, c in enumerate(closes)
        ]


class TestError(object):

    def testOneBuy(self):
        records, report = load_transactions(io.StringIO(
            TXN_HEADER + "C1,GRS434003000,Buy,250.5,2021-01-04\n"
        ))
        assert len(records) == 1
        r = records[0]
        assert r.txn_type is TxnType.Buy
        assert r.value == Decimal('250.5')
        assert r.timestamp == date(2021, 1, 4)
        assert report.rejects == []

    def testNonPositive(self):
        records, report = load_transactions(io.StringIO(
            TXN_HEADER + "C1,GRS434003000,Buy,−5,2021-01-04\n"
        ))
        assert records == []
        assert [r.reason for r in report.rejects] == ['non-positive value']
        assert report.rejects[0].line == 2

    def testBadRows(self):
        records, report = load_transactions(io.StringIO(
            TXN_HEADER +
            "C1,GRS43400300,Buy,10,2021-01-04\n"
            "C1,GRS434003000,Hold,10,2021-01-04\n"
            "C1,GRS434003000,Buy,ten,2021-01-04\n"
            "C1,GRS434003000,Buy,10,someday\n"
            ",GRS434003000,Buy,10,2021-01-04\n"
        ))
        assert records == []
        assert [r.line for r in report.rejects] == [2, 3, 4, 5, 6]

    def testDateFormats(self):
        records, report = load_transactions(io.StringIO(
            TXN_HEADER +
            "C1,GRS434003000,Buy,10,2020-3-27\n"
            "C1,GRS434003000,Buy,10,2020-03-27 14:05:00\n"
            "C1,GRS434003000,Buy,10,now\n"
            "C1,GRS434003000,Buy,10,today\n"
            "C1,GRS434003000,Buy,10,2020\n"
            "C1,GRS434003000,Buy,10,27/03/2020\n"
        ))
        assert [r.timestamp for r in records] == [date(2020, 3, 27)] * 2
        assert [r.line for r in report.rejects] == [4, 5, 6, 7]
        assert set(r.reason for r in report.rejects) == \
            set(['unparseable date'])

    def testTenThousandRows(self):
        rng = random.Random(10000)
        bad = set(rng.sample(range(10000), 3))
        lines = [TXN_HEADER]
        for i in range(10000):
            if i in bad:
                lines.append("C%d,NOTANISIN,Buy,10,2021-01-04\n" % i)
            else:
                lines.append("C%d,%s,%s,%d.25,2021-%02d-%02d\n" % (
                    i % 37, rng.choice(ISINS), rng.choice(['Buy', 'Sell']),
                    rng.randint(1, 9999), rng.randint(1, 12),
                    rng.randint(1, 28)))
        records, report = load_transactions(io.StringIO(''.join(lines)))
        assert len(records) == 9997
        assert len(report.rejects) == 3
        assert sorted(r.line for r in report.rejects) == \
            sorted(i + 2 for i in bad)

    def testMissingColumn(self):
        try:
            load_transactions('./tests/cfg/transactions_missing_column.csv')
        except MissingColumn as e:
            assert e.column == 'totalValue'
            return
        else:
            raise AssertionError("expected an exception")

    def testColumnMapping(self):
        mapping = ColumnMapping('transactions', {'value': 'amount'})
        records, report = load_transactions(
            './tests/cfg/transactions_missing_column.csv', mapping
            )
        assert len(records) == 8
        assert len(report.rejects) == 2

    def testFixtureFiles(self):
        records, report = load_transactions('./tests/cfg/transactions.csv')
        assert len(records) == 8
        assert len(report.rejects) == 2
        prices, report = load_prices('./tests/cfg/prices.csv')
        assert sorted(prices) == sorted(ISINS[:3])
        assets, report = load_assets('./tests/cfg/assets.csv')
        assert [a.isin for a in assets] == sorted(ISINS[:3])
        assert assets[1].industry == 'Airlines'

    def testPricesSorted(self):
        prices, report = load_prices(io.StringIO(
            PRICE_HEADER +
            "GRS434003000,2021-01-06,3\n"
            "GRS434003000,2021-01-04,1\n"
            "GRS434003000,2021-01-05,2\n"
        ))
        series = prices['GRS434003000']
        assert [b.close for b in series] == \
            [Decimal(1), Decimal(2), Decimal(3)]
        assert report.warnings == []

    def testPricesDuplicateDate(self):
        prices, report = load_prices(io.StringIO(
            PRICE_HEADER +
            "GRS434003000,2021-01-04,1\n"
            "GRS434003000,2021-01-04,2\n"
        ))
        series = prices['GRS434003000']
        assert len(series) == 1
        assert series[0].close == Decimal(2)
        assert len(report.warnings) == 1

    def testPricesConserved(self):
        rng = random.Random(5)
        lines = [PRICE_HEADER]
        for isin in ISINS:
            for d in range(40):
                lines.append("%s,%s,%d.5\n" % (
                    isin, (date(2021, 1, 1) + timedelta(days=d)).isoformat(),
                    rng.randint(1, 100)))
        prices, report = load_prices(io.StringIO(''.join(lines)))
        assert len(prices) == 5
        assert sum(len(s) for s in prices.values()) == 200

    def testConstantSeries(self):
        cutoff = date(2022, 1, 1)
        series = daily_series('GRS434003000', cutoff - timedelta(days=70),
                              ['8.54'] * 70)
        summaries = summarize_prices(series, cutoff)
        assert len(summaries) == 1
        s = summaries[0]
        assert s.high == s.low == s.average == s.end_price == Decimal('8.54')

    def testOneToSeventy(self):
        cutoff = date(2022, 1, 1)
        series = daily_series('GRS434003000', cutoff - timedelta(days=70),
                              [str(i) for i in range(1, 71)])
        summaries = summarize_prices(series, cutoff)
        assert len(summaries) == 1
        s = summaries[0]
        assert s.high == Decimal(70)
        assert s.low == Decimal(1)
        assert s.average == Decimal('35.5')
        assert s.end_price == Decimal(70)
        assert s.period_end == cutoff - timedelta(days=1)
        assert (s.period_end - s.period_start).days == 69

    def testStrictCutoff(self):
        cutoff = date(2022, 1, 1)
        series = daily_series('GRS434003000', cutoff - timedelta(days=3),
                              ['1', '2', '3', '100', '200'])
        summaries = summarize_prices(series, cutoff)
        assert len(summaries) == 1
        assert summaries[0].high == Decimal(3)

    def testSummaryOracle(self):
        rng = random.Random(100)
        for n in range(100):
            cutoff = date(2021, 1, 1) + timedelta(days=rng.randint(0, 700))
            first = cutoff - timedelta(days=rng.randint(1, 500))
            series = []
            day = first
            while day < cutoff + timedelta(days=30):
                if rng.random() < 0.7:
                    series.append(PriceBar(
                        'GRS434003000', day,
                        Decimal(rng.randint(100, 99999)) / Decimal(100)))
                day += timedelta(days=1)
            summaries = summarize_prices(series, cutoff)
            bars_before = [b for b in series if b.date < cutoff]
            assert sum(
                len([b for b in bars_before
                     if s.period_start <= b.date <= s.period_end])
                for s in summaries) == len(bars_before)
            ends = [s.period_end for s in summaries]
            assert ends == sorted(ends)
            for s in summaries:
                window = [b for b in series
                          if s.period_start <= b.date <= s.period_end]
                closes = [b.close for b in window]
                assert s.period_end < cutoff
                assert (cutoff - timedelta(days=1) - s.period_end).days \
                    % WINDOW_DAYS == 0
                assert s.high == max(closes)
                assert s.low == min(closes)
                assert s.average == sum(closes) / Decimal(len(closes))
                assert s.end_price == window[-1].close
                assert s.low <= s.average <= s.high
                assert s.low <= s.end_price <= s.high

    def testFig3a(self):
        records = fig3a_record()
        g = build_pkg(records, '00017496858921195E5A', date(2020, 4, 1),
                      vocab)
        txn = vocab.entity('Transaction_1')
        expected = set([
            Triple(txn, vocab.hasParticipant,
                   Literal('00017496858921195E5A')),
            Triple(txn, vocab.involvesSecurity, Literal('GRS434003000')),
            Triple(txn, vocab.transactionValue,
                   Literal('11000', XSD_DECIMAL)),
            Triple(txn, vocab.transactionTimestamp,
                   Literal('2020-03-27', XSD_DATE)),
            Triple(txn, vocab.type, vocab.classes['SellTransaction']),
        ])
        assert expected <= set(g.triples())
        assert set(g.triples()) - expected == set([
            Triple(txn, vocab.type, vocab.classes['Transaction']),
        ])
        assert list_entities(g, vocab.classes['Transaction'], vocab) == [txn]
        g2 = build_pkg(records, '00017496858921195E5A', date(2020, 4, 1),
                       vocab)
        assert serialize_jsonld(g, vocab) == serialize_jsonld(g2, vocab)

    def testPkgCutoffBeforeAll(self):
        records = fig3a_record()
        g = build_pkg(records, '00017496858921195E5A', date(2020, 3, 27),
                      vocab)
        assert len(g) == 0

    def testPkgOracle(self):
        rng = random.Random(50)
        records = []
        for i in range(50):
            records.append(TransactionRecord(
                user_id=rng.choice(['C1', 'C2']),
                isin=rng.choice(ISINS),
                txn_type=rng.choice([TxnType.Buy, TxnType.Sell]),
                value=Decimal(rng.randint(1, 5000)),
                timestamp=date(2021, 1, 1) + timedelta(days=rng.randint(0,
                                                                        364)),
                ))
        cutoff = date(2021, 7, 1)
        g = build_pkg(records, 'C1', cutoff, vocab)
        expected = len([r for r in records
                        if r.user_id == 'C1' and r.timestamp < cutoff])
        nodes = list_entities(g, vocab.classes['Transaction'], vocab)
        assert len(nodes) == expected
        assert len(g) == 6 * expected
        # numbered in chronological order
        stamps = [g.value_of(vocab.entity('Transaction_%d' % k),
                             vocab.transactionTimestamp).value
                  for k in range(1, expected + 1)]
        assert stamps == sorted(stamps)
        for t in g.triples():
            if t.object.datatype == XSD_DATE:
                assert date.fromisoformat(t.object.value) < cutoff

    def testFig3b(self):
        assets = [AssetInfo('GRS495003006', 'Stock', 'Industrials',
                            'Airlines')]
        summary = TenWeekPriceSummary(
            isin='GRS495003006',
            period_start=date(2018, 3, 19),
            period_end=date(2018, 5, 27),
            high=Decimal('9.5'),
            low=Decimal('8.54'),
            average=Decimal('9.1679792'),
            end_price=Decimal('8.54'),
            )
        g = build_mkg({'GRS495003006': [summary]}, assets,
                      date(2018, 5, 28), vocab)
        assert len(g) == 11
        node = vocab.entity('TenWeekPriceSummary_1')
        asset = vocab.entity('Asset_1')
        assert g.value_of(node, vocab.periodHighPrice) == \
            Literal('9.5', XSD_DECIMAL)
        assert g.value_of(node, vocab.periodLowPrice) == \
            Literal('8.54', XSD_DECIMAL)
        assert g.value_of(node, vocab.periodAveragePrice) == \
            Literal('9.1679792', XSD_DECIMAL)
        assert g.value_of(node, vocab.periodEndPrice) == \
            Literal('8.54', XSD_DECIMAL)
        assert g.value_of(node, vocab.periodEndDate) == \
            Literal('2018-05-27', XSD_DATE)
        assert g.value_of(node, vocab.priceOf) == asset
        assert g.value_of(asset, vocab.identifier) == Literal('GRS495003006')
        assert g.value_of(asset, vocab.category) == Literal('Stock')
        assert g.value_of(asset, vocab.sector) == Literal('Industrials')
        assert g.value_of(asset, vocab.industry) == Literal('Airlines')

    def testMkgAssetOnly(self):
        assets = [AssetInfo('GRS495003006', 'Stock', 'Industrials',
                            'Airlines')]
        g = build_mkg({}, assets, date(2018, 5, 28), vocab)
        assert len(g) == 4

    def testMkgCounts(self):
        cutoff = date(2022, 1, 1)
        prices = {}
        assets = []
        for isin in ISINS:
            prices[isin] = daily_series(
                isin, cutoff - timedelta(days=210),
                [str(10 + i % 7) for i in range(210)])
            assets.append(AssetInfo(isin, 'Stock', 'Technology', 'Software'))
        summaries = summarize_all(prices, cutoff)
        assert [len(s) for s in summaries.values()] == [3] * 5
        g = build_mkg(summaries, assets, cutoff, vocab)
        assert len(g) == 5 * 4 + 15 * 7
        assert len(list_entities(
            g, vocab.classes['TenWeekPriceSummary'], vocab)) == 15

    def testMkgMissingMetadata(self):
        cutoff = date(2022, 1, 1)
        prices = {'GRS434003000': daily_series(
            'GRS434003000', cutoff - timedelta(days=10), ['1'] * 10)}
        report = IngestReport()
        g = build_mkg(summarize_all(prices, cutoff), [], cutoff, vocab,
                      report)
        assert len(report.warnings) == 1
        assert len(g) == 1 + 7

    def testBuildDeterminism(self):
        prices, _ = load_prices('./tests/cfg/prices.csv')
        assets, _ = load_assets('./tests/cfg/assets.csv')
        cutoff = date(2021, 9, 15)
        a = build_mkg(summarize_all(prices, cutoff), assets, cutoff, vocab)
        b = build_mkg(summarize_all(prices, cutoff), assets, cutoff, vocab)
        assert serialize_jsonld(a, vocab) == serialize_jsonld(b, vocab)

    def testReportDict(self):
        records, report = load_transactions('./tests/cfg/transactions.csv')
        d = report.to_dict()
        assert len(d['rejects']) == 2
        assert d['rejects'][0]['row']['customerID'] == 'C3'
        json.dumps(d)
