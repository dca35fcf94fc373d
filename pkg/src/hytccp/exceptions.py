# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Errors raised while loading and running hy-tccp programs.

:class:`ProgramError` covers everything detected before the first step and
maps to exit status 1 on the command line; :class:`RuntimeFault` covers the
faults found while stepping and maps to exit status 2.
"""


class HytccpError(Exception):
    """Base class of every error raised by this package."""

    exit_status = 2


class HytccpWarning(UserWarning):
    pass


class ProgramError(HytccpError):
    exit_status = 1

    def __init__(self, message, line=None, column=None, source=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
        self.source = source

    def __str__(self):
        location = [str(part) for part in (self.source, self.line, self.column)]
        location = [part for part in location if part != "None"]
        if not location:
            return self.message
        return f"{':'.join(location)}: {self.message}"


class HytSyntaxError(ProgramError):
    pass


class UnboundProcess(ProgramError):
    pass


class ArityMismatch(ProgramError):
    pass


class KindClash(ProgramError):
    pass


class EmptyChoice(ProgramError):
    pass


class RuntimeFault(HytccpError):
    pass


class NoCurrentValue(RuntimeFault):
    def __init__(self, variable):
        super().__init__(
            f"change({variable}, _, ...) needs a current value for {variable}"
        )
        self.variable = variable


class InconsistentInitialStore(RuntimeFault):
    pass


class MissingDeclaration(RuntimeFault):
    def __init__(self, name, arity):
        super().__init__(f"no declaration for {name}/{arity}")
        self.name = name
        self.arity = arity


class UnknownVariable(HytccpError, KeyError):
    def __str__(self):
        return f"unknown continuous variable {self.args[0]!r}"


class TraceFormatError(HytccpError, ValueError):
    pass
