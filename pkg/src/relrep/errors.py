"""Exception hierarchy.

InputError covers everything caused by bad files, configs, or arguments;
the CLI maps it to exit code 2.  Anything else escaping to the CLI is an
internal error (exit code 1).
"""


class RelrepError(Exception):
    pass


class InputError(RelrepError):
    pass
