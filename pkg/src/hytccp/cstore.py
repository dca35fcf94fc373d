# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Continuous stores: finite maps from variables to ``(value, flow)``."""
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .exceptions import UnknownVariable
from .linear import render_rational


class Entry(NamedTuple):
    value: Fraction
    flow: Fraction


@dataclass(frozen=True)
class ContinuousStore:
    entries: tuple = ()
    inconsistent: bool = False

    @classmethod
    def from_mapping(cls, mapping):
        return cls(
            tuple(
                sorted(
                    (name, Entry(Fraction(value), Fraction(flow)))
                    for name, (value, flow) in mapping.items()
                )
            )
        )

    def as_dict(self):
        return dict(self.entries)

    @property
    def domain(self):
        return frozenset(name for name, _ in self.entries)

    def items(self):
        return iter(self.entries)

    def __contains__(self, name):
        return any(key == name for key, _ in self.entries)

    def __getitem__(self, name):
        for key, entry in self.entries:
            if key == name:
                return entry
        raise UnknownVariable(name)

    def __len__(self):
        return len(self.entries)

    def render(self):
        if self.inconsistent:
            return "false"
        return ", ".join(
            f"{name}↦({render_rational(e.value)},{render_rational(e.flow)})"
            for name, e in self.entries
        )

    def __str__(self):
        return self.render()


EMPTY = ContinuousStore()
BOTTOM = ContinuousStore(inconsistent=True)


def merge(a, b):
    """Union of two stores; a clash on a shared variable gives BOTTOM."""
    if a.inconsistent or b.inconsistent:
        return BOTTOM
    if not b.entries:
        return a
    if not a.entries:
        return b
    merged = a.as_dict()
    for name, entry in b.entries:
        if merged.setdefault(name, entry) != entry:
            return BOTTOM
    return ContinuousStore(tuple(sorted(merged.items())))


def hide_cont(name, store):
    return restrict(store, store.domain - {name})


def hide_cont_many(names, store):
    return restrict(store, store.domain - set(names))


def set_value(store, name, value):
    """``store`` with the value of ``name`` replaced; the flow is kept."""
    if store.inconsistent:
        return BOTTOM
    entries = store.as_dict()
    entries[name] = Entry(Fraction(value), store[name].flow)
    return ContinuousStore(tuple(sorted(entries.items())))


def update(a, b):
    """``a`` overridden by ``b`` on the variables ``b`` defines."""
    if a.inconsistent or b.inconsistent:
        return BOTTOM
    if not b.entries:
        return a
    entries = a.as_dict()
    entries.update(b.entries)
    return ContinuousStore(tuple(sorted(entries.items())))


def project(store, tau):
    """Advance every variable by ``tau`` time units along its flow."""
    if store.inconsistent or tau == 0:
        return store
    return ContinuousStore(
        tuple(
            (name, Entry(e.value + e.flow * tau, e.flow)) for name, e in store.entries
        )
    )


def restrict(store, names):
    if store.inconsistent:
        return BOTTOM
    kept = tuple((name, e) for name, e in store.entries if name in names)
    if len(kept) == len(store.entries):
        return store
    return ContinuousStore(kept)


def render(store):
    return store.render()


def rename_cont(store, mapping):
    """``store`` with its variables renamed; ``mapping`` sends names to names."""
    if store.inconsistent or not set(mapping) & store.domain:
        return store
    return ContinuousStore(
        tuple(sorted((mapping.get(name, name), e) for name, e in store.entries))
    )
