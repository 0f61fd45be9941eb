"""Model hyperparameters shared by the two-stage network and the baseline."""

from dataclasses import asdict, dataclass


@dataclass
class DspnConfig:
    """Dimensions of the satisfaction model.

    The intent dimension h2 must equal n_i + 1: the learned weight vector
    is applied to reports augmented with a constant bias channel.
    """

    n_i: int = 9            # indicators per daily report
    l: int = 10             # observation window length in days
    n_a: int = 8            # padded sequential actions per group per day
    n_e: int = 8            # action embedding dim (V and Q row width)
    d_unit: int = 8
    d_advertiser: int = 8
    d_category: int = 4
    d_tag: int = 8
    d_position: int = 8
    d_indicator: int = 8    # per-indicator valued embedding dim
    h1: int = 18            # first recurrent layer, per direction
    h2: int = 10            # second layer and intent dim, must be n_i + 1
    query_hidden: int = 32
    day_input: int = 24     # day feature vector dim fed to the first layer
    day_position: bool = True  # learned per-day positional embedding
    baseline_hidden1: int = 64
    baseline_hidden2: int = 32

    def __post_init__(self):
        if self.h2 != self.n_i + 1:
            raise ValueError(
                f"intent dim h2 must be n_i + 1 = {self.n_i + 1}, got {self.h2}")
        if not (self.d_tag == self.d_position == self.n_e):
            # action rows sum a kind embedding (n_e) with a target embedding
            raise ValueError("d_tag and d_position must equal n_e")
        for name in ("n_i", "l", "n_a", "n_e", "h1", "h2", "query_hidden",
                     "day_input", "baseline_hidden1", "baseline_hidden2"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def id_dim(self):
        return self.d_unit + self.d_advertiser + self.d_category

    @property
    def report_dim(self):
        return self.n_i * self.d_indicator

    @property
    def ultimate_dim(self):
        return self.d_tag + self.d_position

    @property
    def query_in(self):
        return self.id_dim + self.report_dim + self.ultimate_dim

    @property
    def day_features(self):
        # pooled tag fusion, pooled position fusion, report, ids
        return 2 * self.n_e + self.report_dim + self.id_dim

    @property
    def baseline_day_features(self):
        # report, summed tag/position actions, pooled ultimate groups
        return self.report_dim + 2 * self.n_e + self.ultimate_dim

    @property
    def baseline_in(self):
        # the day blocks are sum-pooled, not concatenated, so no factor of l
        return self.id_dim + self.baseline_day_features

    def to_obj(self):
        return asdict(self)

    @classmethod
    def from_obj(cls, obj):
        return cls(**obj)
