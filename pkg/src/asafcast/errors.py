"""Exception hierarchy shared across the pipeline."""


class AsafError(Exception):
    """Base class for all pipeline errors."""


class InputError(AsafError):
    """Bad or missing user input (exit code 2 at the CLI)."""


class NumericalError(AsafError):
    """Numerical failure during estimation or sampling (exit code 3)."""


# --- ingest -----------------------------------------------------------------

class RejectedSublist(InputError):
    """Cause-code sublist not accepted for this ICD version."""


class RejectedAgeFormat(InputError):
    """Age-group breakdown coarser than the minimum required."""


class InsufficientData(InputError):
    """Too few observations for the requested operation."""


class MissingDenominator(InputError):
    """Zero or missing population / death total where a ratio is required."""


# --- Peto-Lopez -------------------------------------------------------------

class InvalidReference(InputError):
    """Smoker reference rate does not exceed the nonsmoker rate."""


class MissingAgeGroup(InputError):
    """A required age group is absent from an age-indexed map."""


# --- sampler / diagnostics --------------------------------------------------

class InitializationFailure(NumericalError):
    """Chain could not find a state of finite posterior density."""


class ConstantChain(NumericalError):
    """Diagnostic undefined on a chain with zero variance."""


class InsufficientDraws(InputError):
    """Not enough posterior draws for the requested computation."""


class DegenerateTarget(NumericalError):
    """Sensitivity target has zero posterior standard deviation."""


# --- forecast / evaluate ----------------------------------------------------

class InvalidHorizon(InputError):
    """Projection horizon does not start right after the last latent year."""


class EmptyValidation(InputError):
    """No (country, year) pairs available to score."""


class EmptyTraining(InputError):
    """No training observations for a baseline forecast."""


class MissingQuantile(InputError):
    """Requested interval level has no matching quantile pair."""


class MissingTag(InputError):
    """A validation country has no subgroup tag."""


class ParseError(InputError):
    """Malformed input file."""


class MissingInput(InputError):
    """A configured input file does not exist."""
