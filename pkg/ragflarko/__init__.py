# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

# Generic imports
import json
import logging
import os
import threading
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from urllib.parse import quote

from ragflarko.exceptions import *
from ragflarko.rflogging import *
from ragflarko.config import RunConfig, get_param
from ragflarko.evaluation import generate_instances, compute_targets, \
    score_run, leakage_audit, emit_report
from ragflarko.gateway import AuditLog, Gateway, generation_config_dict
from ragflarko.ingest import IngestReport, load_transactions, \
    load_prices, load_assets, summarize_all, build_pkg, build_mkg
from ragflarko.kg import Vocabulary, serialize_jsonld
from ragflarko.pipeline import Instance, RecommendationResult, run_pipeline
from ragflarko.prompts import Prompts, get_prompts
from ragflarko.version import version

import cherrypy

RESULTS_FILE = 'results.jsonl'
AUDIT_FILE = 'audit.jsonl'
MANIFEST_FILE = 'manifest.json'
CONFIG_SNAPSHOT = 'config.json'


def _write_json(path, content):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(content, f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write('\n')


def read_results(path):
    """ Results of a JSON-lines results file, unreadable lines skipped

    :rtype: list of dict, in file order
    """
    ret = []
    if not os.path.isfile(path):
        return ret
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                ret.append(json.loads(line))
            except ValueError:
                cherrypy.log.error(
                    msg="%s:%d: unreadable result line skipped" %
                        (path, number),
                    severity=logging.WARNING,
                )
    return ret


class RagFlarko(object):

    def _handle_exception(self, e):
        if hasattr(e, 'log'):
            cherrypy.log.error(
                msg=e.log,
                severity=logging.ERROR
            )
        else:
            cherrypy.log.error(
                msg="uncaught exception: [%(e)s]" % {'e': str(e)},
                severity=logging.ERROR
            )
        # log the traceback as 'debug'
        cherrypy.log.error(
            msg='',
            severity=logging.DEBUG,
            traceback=True
            )

    def _get_param(self, section, key, config, default=None):
        return get_param(config, section, key, default)

    def _init_generator(self, config):
        """ Load the generator backend and wrap it in a gateway
        @RunConfig: configuration of the run
        """
        params = config.section('generator')
        module = params.get('module', 'ragflarko.backend.backendOpenAI')
        params.setdefault('seed', config.seed())
        try:
            bc = __import__(module, globals(), locals(), ['Backend'], 0)
        except Exception as e:
            self._handle_exception(e)
            raise BackendModuleLoadingFail(module)
        try:
            self.backend = bc.Backend(params, cherrypy.log.error, 'generator')
        except (MissingParameter, WrongParamValue, InvalidParamValue):
            raise
        except Exception as e:
            self._handle_exception(e)
            raise BackendModuleInitFail(module)
        self.generation = config.generation()
        self.budget = config.budget()
        self.gateway = Gateway(
            self.backend,
            self.budget,
            audit=AuditLog(),
            parallelism_cap=self.generation.parallelism_cap,
            )

    def _init_selector(self, config):
        params = config.section('selector')
        params['prompts'] = self.prompts
        module = params.get('module', 'ragflarko.selector.llm')
        try:
            sc = __import__(module, globals(), locals(), ['Selector'], 0)
        except Exception as e:
            self._handle_exception(e)
            raise BackendModuleLoadingFail(module)
        try:
            self.selector = sc.Selector(
                params,
                cherrypy.log.error,
                self.gateway,
                self.generation,
                )
        except (MissingParameter, WrongParamValue, InvalidParamValue):
            raise
        except Exception as e:
            self._handle_exception(e)
            raise BackendModuleInitFail(module)
        cherrypy.log.error(
            msg="selector: %s" % self.selector.info(),
            severity=logging.DEBUG,
        )

    def reload(self, config=None, debug=False):
        """ load/reload configuration
        @RunConfig or dict: configuration of the run
        """
        if not isinstance(config, RunConfig):
            config = RunConfig(config)
        self.config = config
        try:
            level = get_loglevel(
                self._get_param('global', 'log.level', config.config, 'info')
                )
            error_handler = self._get_param(
                'global', 'log.error_handler', config.config, 'stdout'
                )
            if error_handler not in ('stdout', 'syslog', 'file', 'none'):
                raise WrongParamValue(
                    'log.error_handler',
                    'global',
                    ['stdout', 'syslog', 'file', 'none'],
                    )
            error_file = None
            if error_handler == 'file':
                error_file = self._get_param(
                    'global', 'log.error_file', config.config
                    )
            set_error_log(error_handler, level, error_file, debug)

            self.vocab = Vocabulary(config.namespace())
            template_dir = config.get('pipeline', 'templates.dir', '')
            self.prompts = Prompts(template_dir) if template_dir \
                else get_prompts()
            self.mappings = dict(
                (kind, config.mapping(kind))
                for kind in ('transactions', 'prices', 'assets')
                )
            self.variants = config.variants()
            self._init_generator(config)
            self._init_selector(config)
            self.pipeline = config.pipeline_config(self.vocab, self.prompts)
            self.records = None
            self._mkgs = {}
            self._mkg_lock = threading.Lock()

            cherrypy.log.error(
                msg="ragflarko %s configured" % version,
                severity=logging.INFO
            )
        except Exception as e:
            self._handle_exception(e)
            cherrypy.log.error(
                msg="application failed to start",
                severity=logging.ERROR
            )
            raise

    # data and graphs

    def load_data(self):
        """ Load the transactions, prices and assets files (once)
        @rtype: IngestReport, every reject and warning
        """
        if self.records is not None:
            return self.ingest_report
        self.config.check_data_paths()
        report = IngestReport()
        self.records, r = load_transactions(
            self.config.data_file('transactions'),
            self.mappings['transactions'],
            )
        report.extend(r)
        self.prices, r = load_prices(
            self.config.data_file('prices'), self.mappings['prices'],
            )
        report.extend(r)
        assets_file = self.config.data_file('assets', required=False)
        self.assets = []
        if assets_file is not None:
            self.assets, r = load_assets(
                assets_file, self.mappings['assets'],
                )
            report.extend(r)
        self.records_by_user = defaultdict(list)
        for record in self.records:
            self.records_by_user[record.user_id].append(record)
        self.ingest_report = report
        return report

    def all_users(self):
        self.load_data()
        users = self.config.users()
        if users is None:
            users = sorted(self.records_by_user)
        limit = self.config.max_users()
        if limit is not None:
            users = users[:limit]
        return users

    def instances(self):
        return generate_instances(
            self.config.eval_window(), self.all_users()
            )

    def mkg(self, cutoff, report=None):
        """market KG at a cutoff, built once per cutoff"""
        with self._mkg_lock:
            if cutoff not in self._mkgs:
                self._mkgs[cutoff] = build_mkg(
                    summarize_all(self.prices, cutoff),
                    self.assets,
                    cutoff,
                    self.vocab,
                    report,
                    )
            return self._mkgs[cutoff]

    def pkg(self, user, cutoff):
        return build_pkg(
            self.records_by_user.get(user, []), user, cutoff, self.vocab
            )

    # commands

    def build_kg(self, cutoff, output_dir=None):
        """ Dump every user PKG and the MKG at a cutoff
        @date cutoff: recommendation date
        @str output_dir: dump directory
        @rtype: dict, the build manifest
        """
        report = IngestReport()
        report.extend(self.load_data())
        output_dir = output_dir or os.path.join(
            self.config.output_dir(), 'kg-' + cutoff.isoformat()
            )
        pkg_dir = os.path.join(output_dir, 'pkg')
        if not os.path.isdir(pkg_dir):
            os.makedirs(pkg_dir)
        users = self.all_users()
        pkg_counts = {}
        for user in users:
            graph = self.pkg(user, cutoff)
            pkg_counts[user] = len(graph)
            # user ids are free text, keep the file inside pkg_dir
            name = quote(user, safe='') + '.jsonld'
            with open(os.path.join(pkg_dir, name), 'w',
                      encoding='utf-8') as f:
                f.write(serialize_jsonld(graph, self.vocab))
        mkg = build_mkg(
            summarize_all(self.prices, cutoff),
            self.assets, cutoff, self.vocab, report,
            )
        with open(os.path.join(output_dir, 'mkg.jsonld'), 'w',
                  encoding='utf-8') as f:
            f.write(serialize_jsonld(mkg, self.vocab))
        manifest = {
            'version': version,
            'cutoff': cutoff.isoformat(),
            'namespace': self.vocab.namespace,
            'pkg_triples': pkg_counts,
            'mkg_triples': len(mkg),
            'records': len(self.records),
            'assets': len(self.assets),
            'ingest': report.to_dict(),
        }
        _write_json(os.path.join(output_dir, 'build_manifest.json'),
                    manifest)
        cherrypy.log.error(
            msg="graphs at %s written to '%s' (%d PKG, MKG of %d triples)"
                % (cutoff.isoformat(), output_dir, len(users), len(mkg)),
            severity=logging.INFO,
        )
        return manifest

    def _run_one(self, instance, variant):
        result = run_pipeline(
            variant,
            instance,
            self.pkg(instance.user, instance.cutoff),
            self.mkg(instance.cutoff),
            self.selector,
            self.gateway,
            self.pipeline,
            )
        line = json.dumps(result.to_dict(), sort_keys=True,
                          ensure_ascii=False)
        with self._results_lock:
            with open(self._results_path, 'a', encoding='utf-8') as f:
                f.write(line + '\n')
        return result

    def run(self, output_dir=None):
        """ Run every (instance, variant), skipping completed ones
        @str output_dir: run directory
        @rtype: dict, counts of executed, skipped and failed runs
        """
        self.load_data()
        output_dir = output_dir or self.config.output_dir()
        if not os.path.isdir(output_dir):
            os.makedirs(output_dir)
        self._results_path = os.path.join(output_dir, RESULTS_FILE)
        self._results_lock = threading.Lock()
        self.gateway.audit.path = os.path.join(output_dir, AUDIT_FILE)
        _write_json(os.path.join(output_dir, CONFIG_SNAPSHOT),
                    self.config.snapshot())

        previous = read_results(self._results_path)
        done = set(
            (r['instance_id'], r['variant']) for r in previous
            if r.get('status') == 'ok'
            )
        instances = self.instances()
        todo = [
            (inst, variant) for inst in instances for variant in self.variants
            if (inst.instance_id, variant.value) not in done
            ]
        skipped = len(instances) * len(self.variants) - len(todo)
        cherrypy.log.error(
            msg="%d run(s) to execute, %d already completed" %
                (len(todo), skipped),
            severity=logging.INFO,
        )
        for cutoff in sorted(set(inst.cutoff for inst, _ in todo)):
            self.mkg(cutoff)

        with ThreadPoolExecutor(max_workers=self.config.workers()) as pool:
            jobs = [pool.submit(self._run_one, inst, v) for inst, v in todo]
            results = [job.result() for job in jobs]
        failed = [r for r in results if not r.ok]

        # canonical rewrite: plan order, latest line per (instance, variant)
        latest = {}
        for r in read_results(self._results_path):
            key = (r['instance_id'], r['variant'])
            if r.get('status') == 'ok' or key not in latest or \
                    latest[key].get('status') != 'ok':
                latest[key] = r
        ordered = []
        for inst in instances:
            for variant in self.variants:
                key = (inst.instance_id, variant.value)
                if key in latest:
                    ordered.append(latest.pop(key))
        ordered.extend(latest[k] for k in sorted(latest))
        tmp = self._results_path + '.tmp'
        with open(tmp, 'w', encoding='utf-8') as f:
            for r in ordered:
                f.write(json.dumps(r, sort_keys=True, ensure_ascii=False))
                f.write('\n')
        os.replace(tmp, self._results_path)

        summary = {
            'executed': len(results),
            'skipped': skipped,
            'failed': len(failed),
        }
        manifest = {
            'version': version,
            'seed': self.config.seed(),
            'variants': [v.value for v in self.variants],
            'format_version': self.pipeline.format_version,
            'request': self.pipeline.request,
            'instances': len(instances),
            'runs': [
                dict((k, r.get(k)) for k in
                     ('instance_id', 'user', 'cutoff', 'variant', 'status'))
                for r in ordered
                ],
            'selector': self.selector.info(),
            'generation': generation_config_dict(self.generation),
            'budget': {
                'max_context_tokens': self.budget.max_context_tokens,
                'chars_per_token': self.budget.chars_per_token,
            },
            'ingest': {
                'rejects': len(self.ingest_report.rejects),
                'warnings': len(self.ingest_report.warnings),
            },
            'failed': sorted(
                '%s/%s' % (r.instance_id, r.variant.value) for r in failed
                ),
        }
        _write_json(os.path.join(output_dir, MANIFEST_FILE), manifest)
        cherrypy.log.error(
            msg="run finished: %(executed)d executed, %(skipped)d skipped,"
                " %(failed)d failed" % summary,
            severity=logging.WARNING if failed else logging.INFO,
        )
        return summary

    def evaluate(self, results_path=None, output_dir=None):
        """ Score a results file, write reports and the leakage audit
        @str results_path: JSON-lines results
        @str output_dir: report directory
        @rtype: list of MetricsReport
        """
        output_dir = output_dir or self.config.output_dir()
        results_path = results_path or \
            os.path.join(output_dir, RESULTS_FILE)
        if not os.path.isfile(results_path):
            raise NoResults(results_path)
        results = [
            RecommendationResult.from_dict(r)
            for r in read_results(results_path)
            ]
        if not results:
            raise NoResults(results_path)
        self.load_data()
        if not os.path.isdir(output_dir):
            os.makedirs(output_dir)
        instances = self.instances()
        targets = compute_targets(
            self.records, self.prices, instances,
            self.config.eval_window().horizon_days,
            )
        reports = score_run(
            results,
            targets,
            hit_mode=self.config.hit_mode(),
            active_only=self.config.active_users_only(),
            )
        emit_report(reports, os.path.join(output_dir, 'report.csv'), 'CSV')
        emit_report(reports, os.path.join(output_dir, 'report.json'),
                    'JSON')

        audited = sorted(set(
            (r.user, r.cutoff) for r in results if r.cutoff is not None
            ), key=lambda uc: (uc[1], uc[0]))
        violations = []
        for user, cutoff in audited:
            audit = leakage_audit(
                self.pkg(user, cutoff), self.mkg(cutoff), cutoff, self.vocab
                )
            for v in audit['violations']:
                v['instance_id'] = Instance(user, cutoff).instance_id
                violations.append(v)
        _write_json(
            os.path.join(output_dir, 'leakage_audit.json'),
            {'instances': len(audited), 'violations': violations},
            )
        return reports

    def report(self, report_path):
        """ Comparison table of a report.json file
        @rtype: str
        """
        if not os.path.isfile(report_path):
            raise NoResults(report_path)
        with open(report_path, 'r', encoding='utf-8') as f:
            reports = json.load(f)
        if not reports:
            raise EmptyReport()
        return self.prompts.render('report.mako', reports=reports)
