# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""Seeded FAR-Trans-shaped dataset (transactions, closes, assets)."""

import logging
import os
import string

import cherrypy
import numpy as np
import pandas as pd

from ragflarko.ingest import DEFAULT_COLUMNS

COUNTRIES = ('GR', 'DE', 'FR', 'IE', 'LU', 'US')
CATEGORIES = ('Stock', 'Bond', 'MTF')
SECTORS = {
    'Financial Services': ('Banks', 'Insurance', 'Asset Management'),
    'Technology': ('Software', 'Semiconductors'),
    'Energy': ('Oil & Gas', 'Utilities'),
    'Consumer Defensive': ('Food Products', 'Beverages'),
    'Industrials': ('Construction', 'Airlines'),
}
_ALNUM = string.digits + string.ascii_uppercase


def isin_check_digit(body):
    """ Luhn check digit of the first 11 ISIN characters

    Letters are expanded to two digits (A=10 ... Z=35) before the Luhn
    sum.
    """
    digits = ''.join(str(int(c, 36)) for c in body)
    total = 0
    for i, ch in enumerate(reversed(digits)):
        d = int(ch)
        if i % 2 == 0:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return str((10 - total % 10) % 10)


def make_isin(rng):
    country = COUNTRIES[rng.integers(len(COUNTRIES))]
    body = country + ''.join(
        _ALNUM[i] for i in rng.integers(len(_ALNUM), size=9)
        )
    return body + isin_check_digit(body)


def generate(users=10, assets=20, start='2020-01-01', end='2022-12-31',
             seed=0):
    """ Build the three tables

    :param users: number of customers
    :type users: int
    :param assets: number of assets
    :type assets: int
    :param start: first trading day
    :param end: last trading day
    :param seed: numpy generator seed
    :type seed: int
    :rtype: (transactions, prices, assets) as pandas DataFrames with the
        default column names
    """
    rng = np.random.default_rng(seed)
    days = pd.bdate_range(start, end)
    if len(days) == 0:
        raise ValueError('no business day between %s and %s' % (start, end))

    isins = []
    while len(isins) < assets:
        isin = make_isin(rng)
        if isin not in isins:
            isins.append(isin)
    isins.sort()

    cols = DEFAULT_COLUMNS['assets']
    sectors = sorted(SECTORS)
    asset_rows = []
    for isin in isins:
        sector = sectors[rng.integers(len(sectors))]
        industries = SECTORS[sector]
        asset_rows.append({
            cols['isin']: isin,
            cols['category']: CATEGORIES[rng.integers(len(CATEGORIES))],
            cols['sector']: sector,
            cols['industry']: industries[rng.integers(len(industries))],
        })

    cols = DEFAULT_COLUMNS['prices']
    price_rows = []
    closes = {}
    for isin in isins:
        first = rng.uniform(5.0, 150.0)
        drift = rng.normal(0.0002, 0.0004)
        returns = rng.normal(drift, 0.015, size=len(days))
        series = np.round(first * np.exp(np.cumsum(returns)), 4)
        closes[isin] = series
        for day, close in zip(days, series):
            price_rows.append({
                cols['isin']: isin,
                cols['date']: day.strftime('%Y-%m-%d'),
                cols['close']: '%.4f' % close,
            })

    cols = DEFAULT_COLUMNS['transactions']
    txn_rows = []
    for u in range(1, users + 1):
        customer = 'C%05d' % u
        favourites = rng.choice(
            isins, size=min(len(isins), int(rng.integers(2, 7))),
            replace=False,
            )
        count = int(rng.integers(5, 41))
        for day_index in sorted(rng.integers(len(days), size=count)):
            isin = str(favourites[rng.integers(len(favourites))])
            kind = 'Buy' if rng.random() < 0.7 else 'Sell'
            units = float(rng.integers(1, 200))
            value = units * float(closes[isin][day_index])
            txn_rows.append({
                cols['user_id']: customer,
                cols['isin']: isin,
                cols['txn_type']: kind,
                cols['value']: '%.2f' % value,
                cols['timestamp']: days[day_index].strftime('%Y-%m-%d'),
            })

    transactions = pd.DataFrame(txn_rows, columns=list(
        DEFAULT_COLUMNS['transactions'].values()))
    prices = pd.DataFrame(price_rows, columns=list(
        DEFAULT_COLUMNS['prices'].values()))
    asset_table = pd.DataFrame(asset_rows, columns=list(
        DEFAULT_COLUMNS['assets'].values()))
    return transactions, prices, asset_table


def write_dataset(output_dir, **kwargs):
    """ Generate and write transactions.csv, prices.csv and assets.csv

    :rtype: dict {'transactions': path, 'prices': path, 'assets': path}
    """
    tables = dict(zip(
        ('transactions', 'prices', 'assets'), generate(**kwargs)
        ))
    if not os.path.isdir(output_dir):
        os.makedirs(output_dir)
    paths = {}
    for name, frame in tables.items():
        paths[name] = os.path.join(output_dir, name + '.csv')
        frame.to_csv(paths[name], index=False, lineterminator='\n')
    cherrypy.log.error(
        msg="synthetic dataset written to '%s' (%d transactions, %d"
            " closes, %d assets)" % (
                output_dir, len(tables['transactions']),
                len(tables['prices']), len(tables['assets'])),
        severity=logging.INFO,
    )
    return paths
