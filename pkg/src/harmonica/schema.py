"""Published JSON schemas for the CLI run configurations."""

_ACTIVATION = {
    "type": "object",
    "properties": {
        "activation": {
            "enum": ["exp", "square", "poly", "erf_sigmoid", "smooth_hinge",
                     "custom", "identity", "geometric"],
        },
        "coeffs": {"type": "array", "items": {"type": "number"}},
        "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
    "required": ["activation"],
    "additionalProperties": False,
}

_TRUNCATION = {
    "type": "object",
    "properties": {
        "K_max": {"type": "integer", "minimum": 0},
        "A_max": {"type": "integer", "minimum": 0},
        "Q_max": {"type": "integer", "minimum": 1},
        "s_tol": {"type": "number", "exclusiveMinimum": 0},
        "order": {"type": "integer", "minimum": 1},
        "L_max": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_KERNEL = {
    "type": "object",
    "properties": {
        "layers": {"type": "array", "items": _ACTIVATION, "minItems": 1},
        "n": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 2},
        "truncation": _TRUNCATION,
    },
    "required": ["layers", "n", "d"],
    "additionalProperties": False,
}

_NETWORK = {
    "type": "object",
    "properties": {
        "filters": {"type": "array", "items": {"type": "integer", "minimum": 1},
                    "minItems": 1},
        "patch_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "boundary": {"enum": ["circular", "valid"]},
        "pooling": {"enum": ["identity", "gaussian"]},
        "activations": {"type": "array", "items": _ACTIVATION, "minItems": 1},
        "weight_scale": {"type": "number"},
    },
    "required": ["filters", "activations"],
    "additionalProperties": False,
}

_PATCH_INPUT = {
    "type": "object",
    "properties": {
        "paths": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "r": {"type": "integer", "minimum": 2},
        "locations": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer", "minimum": 1},
                      "minItems": 2, "maxItems": 2},
        },
        "stride": {"type": "integer", "minimum": 1},
    },
    "required": ["paths", "r"],
    "additionalProperties": False,
}

SPECTRUM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "kernel": _KERNEL,
        "k_max": {"type": "integer", "minimum": 1},
        "fit_rank_range": {"type": "array", "items": {"type": "integer", "minimum": 1},
                           "minItems": 2, "maxItems": 2},
    },
    "required": ["kernel"],
    "additionalProperties": False,
}

RECONSTRUCT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "kernel": _KERNEL,
        "k_max": {"type": "integer", "minimum": 1},
        "pairs": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kernel"],
    "additionalProperties": False,
}

LEARNING_CURVE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "kernel": _KERNEL,
        "schedule": {
            "type": "object",
            "properties": {
                "beta": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
                "mu_exp": {"type": "number"},
            },
            "required": ["beta"],
            "additionalProperties": False,
        },
        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 3},
                  "minItems": 1},
        "test_size": {"type": "integer", "minimum": 1},
        "target": {
            "type": "object",
            "properties": {
                "type": {"enum": ["network", "source", "zero"]},
                "network": _NETWORK,
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "profiles": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "degrees": {"type": "array",
                                        "items": {"type": "integer", "minimum": 0}},
                            "coeff": {"type": "number"},
                        },
                        "required": ["degrees"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["type"],
            "additionalProperties": False,
        },
    },
    "required": ["kernel", "schedule", "sizes", "target"],
    "additionalProperties": False,
}

GRAM_EIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "kernel": _KERNEL,
        "ell": {"type": "integer", "minimum": 1},
        "top_k": {"type": "integer", "minimum": 1},
        "k_max": {"type": "integer", "minimum": 1},
    },
    "required": ["kernel"],
    "additionalProperties": False,
}

CNN_LABEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 2},
        "count": {"type": "integer", "minimum": 1},
        "network": _NETWORK,
        "images": _PATCH_INPUT,
    },
    "required": ["network"],
    "additionalProperties": False,
}

SCHEMAS = {
    "spectrum": SPECTRUM_SCHEMA,
    "reconstruct": RECONSTRUCT_SCHEMA,
    "learning-curve": LEARNING_CURVE_SCHEMA,
    "gram-eig": GRAM_EIG_SCHEMA,
    "cnn-label": CNN_LABEL_SCHEMA,
}
