# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

"""In-memory RDF-style graphs.

Terms, triples, a set-semantics graph indexed by subject and object,
subgraph extraction with the semantics of the CONSTRUCT template below,
rendering of that template, and deterministic JSON-LD serialization.
"""

import json
import re
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

from ragflarko.exceptions import WrongTerm, WrongTriple, EmptyNodeList

XSD = 'http://www.w3.org/2001/XMLSchema#'
XSD_DECIMAL = XSD + 'decimal'
XSD_DATE = XSD + 'date'

DEFAULT_NAMESPACE = 'urn:flarko:'

CONSTRUCT_TEMPLATE = (
    "CONSTRUCT { ?s ?p ?o }\n"
    "WHERE {\n"
    "    VALUES ?node { %(node_list)s }\n"
    "    { ?node ?p ?o . BIND(?node as ?s) }\n"
    "    UNION\n"
    "    { ?s ?p ?node . BIND(?node as ?o) }\n"
    "}"
)

_WHITESPACE = re.compile(r'\s')


class TermKind(Enum):
    IRI = 'IRI'
    Literal = 'Literal'


@dataclass(frozen=True)
class Term:
    kind: TermKind
    value: str
    datatype: str = None

    def __post_init__(self):
        if self.kind is TermKind.IRI:
            if not self.value:
                raise WrongTerm(self.value, 'empty IRI')
            if _WHITESPACE.search(self.value):
                raise WrongTerm(self.value, 'whitespace in IRI')
            if self.datatype is not None:
                raise WrongTerm(self.value, 'IRI with a datatype')

    def sort_key(self):
        return (self.kind.value, self.value, self.datatype or '')

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    @property
    def is_iri(self):
        return self.kind is TermKind.IRI

    def local_name(self):
        """last segment of an IRI (after '#', '/' or ':')"""
        return re.split(r'[#/:]', self.value)[-1]

    def __str__(self):
        if self.is_iri:
            return '<' + self.value + '>'
        if self.datatype:
            return '"%s"^^<%s>' % (self.value, self.datatype)
        return '"%s"' % self.value


def IRI(value):
    return Term(TermKind.IRI, value)


def Literal(value, datatype=None):
    return Term(TermKind.Literal, str(value), datatype)


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if not self.subject.is_iri:
            raise WrongTriple(self, 'subject')
        if not self.predicate.is_iri:
            raise WrongTriple(self, 'predicate')

    def sort_key(self):
        return (
            self.subject.sort_key(),
            self.predicate.sort_key(),
            self.object.sort_key(),
            )

    def __str__(self):
        return '%s %s %s .' % (self.subject, self.predicate, self.object)


class Graph(object):
    """Set of triples with by-subject and by-object indexes.

    Built by a single writer through add()/insert(), then only read.
    """

    def __init__(self, triples=()):
        self._triples = set()
        self._by_subject = defaultdict(set)
        self._by_object = defaultdict(set)
        for t in triples:
            self.add(t)

    def add(self, triple):
        if not isinstance(triple, Triple):
            raise WrongTriple(triple, 'container')
        if triple in self._triples:
            return self
        self._triples.add(triple)
        self._by_subject[triple.subject].add(triple)
        self._by_object[triple.object].add(triple)
        return self

    def by_subject(self, subject):
        return frozenset(self._by_subject.get(subject, ()))

    def by_object(self, obj):
        return frozenset(self._by_object.get(obj, ()))

    def subjects(self):
        return set(self._by_subject)

    def objects_of(self, subject, predicate):
        """objects o such that (subject, predicate, o) is in the graph"""
        return sorted(
            t.object for t in self._by_subject.get(subject, ())
            if t.predicate == predicate
            )

    def value_of(self, subject, predicate):
        """single object of (subject, predicate), None when absent"""
        objs = self.objects_of(subject, predicate)
        if not objs:
            return None
        return objs[0]

    def triples(self):
        return frozenset(self._triples)

    def sorted_triples(self):
        return sorted(self._triples, key=Triple.sort_key)

    def __iter__(self):
        return iter(self.sorted_triples())

    def __len__(self):
        return len(self._triples)

    def __contains__(self, triple):
        return triple in self._triples

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __le__(self, other):
        return self._triples <= other._triples

    def __or__(self, other):
        return Graph(self._triples | other._triples)

    def __repr__(self):
        return '<Graph of %d triple(s)>' % len(self._triples)


class Vocabulary(object):
    """Predicate and class IRIs of both knowledge graphs"""

    predicate_names = (
        # transactions
        'hasParticipant', 'involvesSecurity', 'transactionValue',
        'transactionTimestamp', 'type',
        # price summaries
        'priceOf', 'periodEndPrice', 'periodAveragePrice',
        'periodHighPrice', 'periodLowPrice', 'periodEndDate',
        # assets
        'identifier', 'category', 'sector', 'industry',
    )

    class_names = (
        'Transaction', 'BuyTransaction', 'SellTransaction',
        'TenWeekPriceSummary',
    )

    def __init__(self, namespace=DEFAULT_NAMESPACE):
        if not namespace or _WHITESPACE.search(namespace):
            raise WrongTerm(namespace, 'invalid namespace')
        self.namespace = namespace
        self.predicates = dict(
            (name, IRI(namespace + name)) for name in self.predicate_names
            )
        self.classes = dict(
            (name, IRI(namespace + name)) for name in self.class_names
            )
        self._local_names = dict(
            (iri.value, name) for name, iri in self.predicates.items()
            )

    def __getattr__(self, name):
        # vocab.priceOf, vocab.transactionValue...
        predicates = self.__dict__.get('predicates', {})
        if name in predicates:
            return predicates[name]
        raise AttributeError(name)

    def entity(self, local_name):
        return IRI(self.namespace + local_name)

    def context(self):
        return dict(
            (name, iri.value) for name, iri in self.predicates.items()
            )

    def compact(self, predicate):
        """JSON-LD key of a predicate IRI"""
        return self._local_names.get(predicate.value, predicate.value)


def insert(graph, triple):
    """ Insert a triple in a graph

    :param graph: the graph being built
    :type graph: Graph
    :param triple: the triple to insert (subject and predicate are IRIs)
    :type triple: Triple
    :rtype: Graph, the same graph, containing the triple
    """
    return graph.add(triple)


def extract_subgraph(graph, nodes):
    """ All triples where one of the nodes is the subject or the object

    :param graph: the source graph, left untouched
    :type graph: Graph
    :param nodes: selected entities, duplicates and unknown nodes allowed
    :type nodes: list of Term
    :rtype: Graph
    """
    result = Graph()
    for node in set(nodes):
        for t in graph.by_subject(node):
            result.add(t)
        for t in graph.by_object(node):
            result.add(t)
    return result


def render_construct_query(nodes):
    """ Render the CONSTRUCT query retrieving the nodes' incident triples

    :param nodes: non-empty list of IRI terms, rendered in input order
    :type nodes: list of Term
    :rtype: string
    """
    if not nodes:
        raise EmptyNodeList()
    for n in nodes:
        if not n.is_iri:
            raise WrongTerm(n.value, 'literal in a VALUES node list')
    node_list = ' '.join('<%s>' % n.value for n in nodes)
    return CONSTRUCT_TEMPLATE % {'node_list': node_list}


def _jsonld_value(term):
    if term.is_iri:
        return {'@id': term.value}
    if term.datatype:
        return {'@type': term.datatype, '@value': term.value}
    return term.value


def serialize_jsonld(graph, vocab):
    """ Serialize a graph as compacted JSON-LD

    One node object per subject, subjects sorted by IRI, keys sorted,
    multi-valued predicates as arrays sorted by term; byte-stable.

    :param graph: graph to serialize
    :type graph: Graph
    :param vocab: vocabulary providing the @context
    :type vocab: Vocabulary
    :rtype: string
    """
    nodes = []
    for subject in sorted(graph.subjects(), key=lambda s: s.value):
        by_key = defaultdict(list)
        for t in graph.by_subject(subject):
            by_key[vocab.compact(t.predicate)].append(t.object)
        node = {'@id': subject.value}
        for key, objs in by_key.items():
            values = [_jsonld_value(o) for o in sorted(objs)]
            node[key] = values[0] if len(values) == 1 else values
        nodes.append(node)
    doc = {'@context': vocab.context(), '@graph': nodes}
    return json.dumps(doc, sort_keys=True, ensure_ascii=False)


def parse_jsonld(text, vocab):
    """ Rebuild the graph from serialize_jsonld output

    :rtype: Graph
    """
    doc = json.loads(text)
    context = doc.get('@context', {})
    graph = Graph()
    for node in doc.get('@graph', []):
        subject = IRI(node['@id'])
        for key, values in node.items():
            if key == '@id':
                continue
            predicate = IRI(context.get(key, key))
            if not isinstance(values, list):
                values = [values]
            for v in values:
                if isinstance(v, dict) and '@id' in v:
                    obj = IRI(v['@id'])
                elif isinstance(v, dict):
                    obj = Literal(v['@value'], v.get('@type'))
                else:
                    obj = Literal(v)
                graph.add(Triple(subject, predicate, obj))
    return graph


def list_entities(graph, type_value, vocab=None):
    """ Subjects typed with type_value

    :param graph: graph to search
    :type graph: Graph
    :param type_value: class IRI, object of the 'type' triples
    :type type_value: Term
    :param vocab: vocabulary giving the type predicate, any predicate
        named 'type' matches when None
    :rtype: sorted list of distinct Term
    """
    if vocab is None:
        is_type = lambda p: p.local_name() == 'type'
    else:
        is_type = lambda p: p == vocab.type
    return sorted(set(
        t.subject for t in graph.by_object(type_value)
        if is_type(t.predicate)
        ))
