"""Exception types raised by the toolkit."""


class NPError(Exception):
    """Base class for all toolkit errors."""


class PointOutsideChart(NPError):
    pass


class MetricNotPositiveDefinite(NPError):
    def __init__(self, eigenvalue, point=None):
        self.eigenvalue = float(eigenvalue)
        self.point = point
        super().__init__(f"metric not positive definite: eigenvalue {self.eigenvalue:.3e}"
                         + ("" if point is None else f" at {list(point)}"))


class StencilLeavesChart(NPError):
    pass


class LeftChartDomain(NPError):
    def __init__(self, t_exit, trace=None):
        self.t_exit = float(t_exit)
        self.trace = trace
        super().__init__(f"geodesic left the chart domain at t = {self.t_exit:.6g}")


class StepNotPositive(NPError):
    pass


class ZeroField(NPError):
    pass


class FrameSeedDegenerate(NPError):
    pass


class NotGeodesicField(NPError):
    pass


class HypothesesViolated(NPError):
    def __init__(self, reasons):
        self.reasons = list(reasons)
        super().__init__("hypotheses violated: " + "; ".join(self.reasons))


class UnknownManifold(NPError):
    pass


class UnknownField(NPError):
    pass


class BadParameter(NPError):
    pass
