"""
Published JSON Result Schemas
"""

from marshmallow import Schema, fields, validate

METHODS = ["osc", "esc", "psc", "nsc"]


class EigenScalingSchema(Schema):
    eigenvalues = fields.List(fields.Float(), required=True)
    n = fields.Integer(required=True)
    shortfall = fields.Integer(required=True)
    n_donors = fields.Integer(required=True)
    b_index = fields.Integer(allow_none=True)
    a_index = fields.Integer(allow_none=True)
    n_prime = fields.Integer(allow_none=True)


class TuningSchema(Schema):
    a_star = fields.Float(required=True, validate=validate.Range(0, 1))
    b_star = fields.Float(required=True, validate=validate.Range(0, 1))
    a = fields.Float(required=True, validate=validate.Range(min=0))
    b = fields.Float(required=True, validate=validate.Range(min=0))
    scaling = fields.Nested(EigenScalingSchema, allow_none=True)
    scheme = fields.String(validate=validate.OneOf(["control_units", "pretreatment_periods"]))
    grid_step = fields.Float()
    converged = fields.Boolean()
    selected = fields.Boolean()


class SeriesSchema(Schema):
    time_labels = fields.List(fields.String(), required=True)
    t0 = fields.Integer(required=True)
    treated = fields.List(fields.Float(), required=True)
    synthetic = fields.List(fields.Float(), required=True)
    gap = fields.List(fields.Float(), required=True)
    variance = fields.List(fields.Float(), allow_none=True)
    ci_lower = fields.List(fields.Float(), allow_none=True)
    ci_upper = fields.List(fields.Float(), allow_none=True)
    level = fields.Float(validate=validate.Range(0, 1, min_inclusive=False, max_inclusive=False))


class DiscrepancySchema(Schema):
    aggregate = fields.Float(required=True)
    pairwise = fields.Float(required=True)
    max_abs_weight = fields.Float(required=True)


class EstimateResultSchema(Schema):
    """Result file written by `estimate`"""

    treated = fields.String(required=True)
    method = fields.String(required=True, validate=validate.OneOf(METHODS))
    weights = fields.Dict(keys=fields.String(), values=fields.Float(), required=True)
    tuning = fields.Nested(TuningSchema, required=True)
    pre_rmspe = fields.Float(required=True)
    effect = fields.Nested(SeriesSchema, required=True)
    discrepancies = fields.Nested(DiscrepancySchema, required=True)


class PlaceboResultSchema(Schema):
    """Result file written by `placebo`"""

    treated = fields.String(required=True)
    method = fields.String(required=True, validate=validate.OneOf(METHODS))
    tuning_policy = fields.String(required=True, validate=validate.OneOf(["reuse", "reselect"]))
    treated_rank = fields.Integer(required=True, validate=validate.Range(min=1))
    p_value = fields.Float(required=True, validate=validate.Range(0, 1))
    n_units = fields.Integer(required=True)
    n_valid = fields.Integer(required=True)
    failed_units = fields.List(fields.String(), required=True)
    warnings = fields.List(fields.String(), required=True)


class HullResultSchema(Schema):
    """Certificate file written by `hull`"""

    treated = fields.String(required=True)
    verdict = fields.String(required=True, validate=validate.OneOf(["inside", "outside"]))
    objective = fields.Float(required=True)
    iterations = fields.Integer(required=True)
    weights = fields.Dict(keys=fields.String(), values=fields.Float(), allow_none=True)
    residual = fields.List(fields.Float(), allow_none=True)
    normal = fields.List(fields.Float(), allow_none=True)
    offset = fields.Float(allow_none=True)
