# -*- coding: utf-8 -*-
# vim:set expandtab tabstop=4 shiftwidth=4:
#
# The MIT License (MIT)
# RagFlarko

import yaml
from yaml.constructor import ConstructorError
from yaml.nodes import MappingNode


class DumplicatedKey(Exception):
    def __init__(self, key):
        self.key = key


# Safe loader refusing duplicated keys, silently merged by PyYAML.
# JSON documents are YAML documents, so run configs go through it too.
class NoDumpLoader(yaml.SafeLoader):

    def construct_mapping(self, node, deep=False):
        if not isinstance(node, MappingNode):
            raise ConstructorError(
                None,
                None,
                "expected a mapping node, but found %s" % node.id,
                node.start_mark
                )
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=True)
            try:
                hash(key)
            except TypeError:
                raise ConstructorError(
                    "while constructing a mapping",
                    node.start_mark,
                    "found unacceptable key",
                    key_node.start_mark
                    )
            if key in seen:
                raise DumplicatedKey(key)
            seen.add(key)
        return yaml.SafeLoader.construct_mapping(self, node, deep=deep)


def loadNoDump(stream):
    return yaml.load(stream, Loader=NoDumpLoader)
