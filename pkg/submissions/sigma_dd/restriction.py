class Restriction:
    """Dual decomposition restriction: S times the largest local range of A_i x."""

    def __init__(self, delta):
        self.delta = delta

    def fit(self, problems):
        return self

    def sigma(self, problem, report):
        return report.sigma_dd
