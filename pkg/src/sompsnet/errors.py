"""Exception hierarchy shared across the package."""


class SompsError(Exception):
    """Base class for all package-specific errors."""


class ParseError(SompsError):
    """A line of an input file violates the expected schema."""

    def __init__(self, path, line_no, field, message):
        self.path = str(path)
        self.line_no = line_no
        self.field = field
        super().__init__(f"{self.path}:{line_no}: field '{field}': {message}")


class ValidationError(SompsError):
    """Cross-record corpus invariant violated (dangling ids, duplicates)."""


class SplitError(SompsError):
    """A stratified split cannot satisfy its per-class constraints."""


class NotFittedError(SompsError):
    """A fitted component (encoders, standardizer) was used before fitting."""


class IneligibleAtCutoffError(SompsError):
    """An article has no tweets inside the requested time window."""

    def __init__(self, news_id, cutoff_hours):
        self.news_id = news_id
        self.cutoff_hours = cutoff_hours
        super().__init__(
            f"article {news_id!r} has no tweets within {cutoff_hours} h of its first tweet"
        )


class TrainingDivergenceError(SompsError):
    """Loss became NaN/Inf during optimisation."""

    def __init__(self, epoch, batch_index, news_ids):
        self.epoch = epoch
        self.batch_index = batch_index
        self.news_ids = list(news_ids)
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch_index} "
            f"(articles: {', '.join(self.news_ids)})"
        )


class FormatError(SompsError):
    """A binary artifact has an unknown magic/version or a corrupt header."""
