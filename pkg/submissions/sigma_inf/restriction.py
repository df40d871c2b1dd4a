class Restriction:
    """S times the largest local restriction: enough once the allocations have converged."""

    def __init__(self, delta):
        self.delta = delta

    def fit(self, problems):
        return self

    def sigma(self, problem, report):
        return report.sigma_inf
