class Restriction:
    """Asymptotic restriction enlarged by delta, for a finite number of rounds."""

    def __init__(self, delta):
        self.delta = delta

    def fit(self, problems):
        return self

    def sigma(self, problem, report):
        return report.sigma_ft
