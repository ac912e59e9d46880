#!/usr/bin/env python3
# Copyright 2026 The relfuzz Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates fixtures/mini_corpus.json and fixtures/mini_mock.json."""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def tensor(shape, seed, dtype="float32"):
    return {"kind": "tensor", "shape": shape, "dtype": dtype, "seed": seed}


def i(v):
    return {"kind": "int", "value": v}


def b(v):
    return {"kind": "bool", "value": v}


def s(v):
    return {"kind": "str", "value": v}


def lst(*items):
    return {"kind": "list", "items": list(items)}


NONE = {"kind": "none"}

# name -> (args, description, code blocks)
# args are (name, default or None for required, mock kinds)
APIS = {
    "mini.sum": ([("input", None, ["tensor"]), ("dim", NONE, ["int", "none"]), ("keepdim", b(False), ["bool"])],
                 "Returns the sum of all elements in the input tensor, or along the given dimension.", []),
    "mini.total": ([("x", None, ["tensor"]), ("axis", NONE, ["int", "none"]), ("keepdims", b(False), ["bool"])],
                   "Computes the sum of elements across dimensions of a tensor.", []),
    "mini.mean": ([("input", None, ["tensor"]), ("dim", NONE, ["int", "none"]), ("keepdim", b(False), ["bool"])],
                  "Returns the mean value of all elements in the input tensor.", []),
    "mini.prod": ([("input", None, ["tensor"]), ("dim", NONE, ["int", "none"]), ("keepdim", b(False), ["bool"])],
                  "Returns the product of all elements in the input tensor.", []),
    "mini.vsplit": ([("input", None, ["tensor"]), ("indices_or_sections", None, ["int", "list"])],
                    "Splits input, a tensor with two or more dimensions, into multiple tensors vertically "
                    "according to indices_or_sections.",
                    [">>> mini.tensor_split(input, indices_or_sections, dim=0)"]),
    "mini.hsplit": ([("input", None, ["tensor"]), ("indices_or_sections", None, ["int", "list"])],
                    "Splits input, a tensor with one or more dimensions, into multiple tensors horizontally "
                    "according to indices_or_sections.", []),
    "mini.tensor_split": ([("input", None, ["tensor"]), ("indices_or_sections", None, ["int", "list"]),
                           ("dim", i(0), ["int"])],
                          "Splits a tensor into multiple sub-tensors along dimension dim according to "
                          "indices_or_sections.", []),
    "mini.avg_pool": ([("input", None, ["tensor"]), ("kernel_size", None, ["int"]), ("stride", NONE, ["int", "none"]),
                       ("padding", i(0), ["int"])],
                      "Applies 1D average pooling over an input signal composed of several input planes.", []),
    "mini.max_pool": ([("input", None, ["tensor"]), ("kernel_size", None, ["int"]), ("stride", NONE, ["int", "none"]),
                       ("padding", i(0), ["int"])],
                      "Applies 1D max pooling over an input signal composed of several input planes.", []),
    "mini.kth_value": ([("input", None, ["tensor"]), ("k", None, ["int"]), ("dim", i(-1), ["int"]),
                        ("keepdim", b(False), ["bool"])],
                       "Returns the k-th smallest element of the input tensor along the given dimension.", []),
    "mini.Tensor.kth_value": ([("self", None, ["tensor"]), ("k", None, ["int"]), ("dim", i(-1), ["int"]),
                               ("keepdim", b(False), ["bool"])],
                              "See mini.kth_value.", []),
    "mini.scatter_nd": ([("indices", None, ["tensor"]), ("updates", None, ["tensor"]), ("shape", None, ["list"])],
                        "Scatters updates into a new zero tensor of the given shape according to indices.",
                        ["mini.tensor_scatter_nd_add(mini.zeros(shape, updates.dtype), indices, updates)"]),
    "mini.tensor_scatter_nd_add": ([("tensor", None, ["tensor"]), ("indices", None, ["tensor"]),
                                    ("updates", None, ["tensor"])],
                                   "Adds sparse updates to an existing tensor according to indices.", []),
    "mini.zeros": ([("shape", None, ["list", "tuple"]), ("dtype", s("float32"), ["str", "raw"])],
                   "Returns a tensor filled with the scalar value 0, with the shape defined by the argument shape.",
                   []),
    "mini.ones": ([("shape", None, ["list", "tuple"]), ("dtype", s("float32"), ["str", "raw"])],
                  "Returns a tensor filled with the scalar value 1, with the shape defined by the argument shape.",
                  []),
    "mini.maximum": ([("input", None, ["tensor"]), ("other", None, ["tensor"])],
                     "Computes the element-wise maximum of input and other.", []),
    "mini.minimum": ([("input", None, ["tensor"]), ("other", None, ["tensor"])],
                     "Computes the element-wise minimum of input and other.", []),
    "mini.abs": ([("input", None, ["tensor"])], "Computes the absolute value of each element in input.", []),
    "mini.neg": ([("input", None, ["tensor"])], "Returns a new tensor with the negative of the elements of input.",
                 []),
    "mini.exp": ([("input", None, ["tensor"])],
                 "Returns a new tensor with the exponential of the elements of the input tensor.", []),
    "mini.log": ([("input", None, ["tensor"])],
                 "Returns a new tensor with the natural logarithm of the elements of input.", []),
    "mini.relu": ([("input", None, ["tensor"])], "Applies the rectified linear unit function element-wise.", []),
    "mini.sigmoid": ([("input", None, ["tensor"])], "Applies the logistic sigmoid function element-wise.", []),
    "mini.reshape": ([("input", None, ["tensor"]), ("shape", None, ["list", "tuple"])],
                     "Returns a tensor with the same data and number of elements as input, but with the specified "
                     "shape.", []),
    "mini.transpose": ([("input", None, ["tensor"]), ("dim0", None, ["int"]), ("dim1", None, ["int"])],
                       "Returns a tensor that is a transposed version of input, with dimensions dim0 and dim1 "
                       "swapped.", []),
    "mini.flatten": ([("input", None, ["tensor"]), ("start_dim", i(0), ["int"]), ("end_dim", i(-1), ["int"])],
                     "Flattens input by reshaping it into a one-dimensional tensor.", []),
    "mini.matmul": ([("input", None, ["tensor"]), ("other", None, ["tensor"])],
                    "Matrix product of two tensors.", []),
    "mini.add": ([("input", None, ["tensor"]), ("other", None, ["tensor"]), ("alpha", i(1), ["int", "float"])],
                 "Adds other, scaled by alpha, to input.", []),
    "mini.sub": ([("input", None, ["tensor"]), ("other", None, ["tensor"]), ("alpha", i(1), ["int", "float"])],
                 "Subtracts other, scaled by alpha, from input.", []),
    "mini.clamp": ([("input", None, ["tensor"]), ("min", NONE, ["float", "int", "none"]),
                    ("max", NONE, ["float", "int", "none"])],
                   "Clamps all elements in input into the range [min, max].", []),
}

SEEDS = [
    ("mini.sum", [tensor([3, 4], 11)], {}),
    ("mini.sum", [tensor([2, 5], 12), i(1)], {}),
    ("mini.sum", [tensor([4], 13)], {"keepdim": b(True)}),
    ("mini.mean", [tensor([3, 4], 21)], {}),
    ("mini.mean", [tensor([2, 2, 2], 22), i(0)], {}),
    ("mini.vsplit", [tensor([4, 3], 31), i(2)], {}),
    ("mini.vsplit", [tensor([6, 2], 32), lst(i(1), i(3))], {}),
    ("mini.avg_pool", [tensor([1, 2, 8], 41), i(2)], {}),
    ("mini.avg_pool", [tensor([2, 3, 10], 42), i(3), i(1)], {"padding": i(1)}),
    ("mini.kth_value", [tensor([2, 5], 51), i(2)], {}),
    ("mini.kth_value", [tensor([3, 4], 52), i(4)], {"dim": i(-1)}),
    ("mini.scatter_nd", [tensor([2, 1], 61, "int64"), tensor([2], 62), lst(i(4))], {}),
    ("mini.zeros", [lst(i(2), i(3))], {}),
    ("mini.zeros", [lst(i(4))], {"dtype": s("int64")}),
    ("mini.maximum", [tensor([3], 71), tensor([3], 72)], {}),
    ("mini.abs", [tensor([2, 2], 81)], {}),
    ("mini.neg", [tensor([5], 82)], {}),
    ("mini.exp", [tensor([3], 83)], {}),
    ("mini.log", [tensor([3], 84)], {}),
    ("mini.relu", [tensor([2, 3], 85)], {}),
    ("mini.reshape", [tensor([2, 3], 91), lst(i(3), i(2))], {}),
    ("mini.transpose", [tensor([2, 3], 92), i(0), i(1)], {}),
    ("mini.flatten", [tensor([2, 3, 4], 93)], {}),
    ("mini.matmul", [tensor([2, 3], 94), tensor([3, 2], 95)], {}),
    ("mini.add", [tensor([4], 96), tensor([4], 97)], {}),
    ("mini.add", [tensor([2, 2], 98), tensor([2, 2], 99)], {"alpha": i(2)}),
]

NEG_DIM = {"when": "negative_dim", "class": "RuntimeError"}

# name -> extra model fields; APIs sharing a value_class compute the same
# function of their value_args.
MODELS = {
    "mini.sum": {"value_class": "sum", "value_args": ["input", "dim"]},
    "mini.total": {"value_class": "sum", "value_args": ["x", "axis"]},
    "mini.mean": {"value_class": "mean", "value_args": ["input", "dim"]},
    "mini.prod": {"value_class": "prod", "value_args": ["input", "dim"]},
    "mini.vsplit": {"value_class": "vsplit", "value_args": ["input", "indices_or_sections"],
                    "exception_on": [{"when": "rank_below", "min": 2, "class": "RuntimeError"}]},
    "mini.hsplit": {"value_class": "hsplit", "value_args": ["input", "indices_or_sections"],
                    "exception_on": [{"when": "rank_below", "min": 1, "class": "RuntimeError"}]},
    "mini.tensor_split": {"value_class": "vsplit", "value_args": ["input", "indices_or_sections"],
                          "exception_on": [{"when": "rank_below", "min": 1, "class": "RuntimeError"}]},
    # seeded status bug: avg_pool accepts negative dimensions
    "mini.avg_pool": {"value_class": "avg_pool", "skip_negative_dim": True,
                      "exception_on": [{"when": "rank_below", "min": 2, "class": "RuntimeError"}]},
    "mini.max_pool": {"value_class": "max_pool",
                      "exception_on": [{"when": "rank_below", "min": 2, "class": "RuntimeError"}]},
    # seeded value bug: out-of-range k reads garbage instead of failing
    "mini.kth_value": {"value_class": "kth_value", "value_args": ["input", "k", "dim"],
                       "unstable_on": [{"when": "index_out_of_range", "param": "k"}]},
    "mini.Tensor.kth_value": {"value_class": "kth_value", "value_args": ["self", "k", "dim"]},
    "mini.scatter_nd": {"value_class": "scatter_nd"},
    "mini.tensor_scatter_nd_add": {"value_class": "scatter_nd"},
    "mini.zeros": {"value_class": "zeros",
                   "exception_on": [{"when": "negative_int", "class": "RuntimeError"}]},
    "mini.ones": {"value_class": "ones",
                  "exception_on": [{"when": "negative_int", "class": "RuntimeError"}]},
}


def params(args):
    out = []
    for name, default, kinds in args:
        p = {"name": name, "kinds": kinds}
        if default is not None:
            p["default"] = default
        out.append(p)
    return out


def main():
    apis = []
    for name, (args, desc, blocks) in APIS.items():
        apis.append({
            "name": name,
            "args": [{"name": a, "position": k, "optional": d is not None, "default": d}
                     for k, (a, d, _) in enumerate(args)],
            "description": desc,
            "code_blocks": blocks,
        })
    invocations = [{"api": api, "positional": pos, "keyword": kw, "origin": "seed"} for api, pos, kw in SEEDS]
    corpus = {"apis": apis, "invocations": invocations}

    models = {}
    for name, (args, _, _) in APIS.items():
        m = {"params": params(args)}
        extra = dict(MODELS.get(name, {}))
        base = [] if extra.pop("skip_negative_dim", False) else [NEG_DIM]
        m["exception_on"] = base + extra.pop("exception_on", [])
        m.update(extra)
        models[name] = m
    mock = {"apis": models}

    (OUT / "mini_corpus.json").write_text(json.dumps(corpus, indent=2) + "\n")
    (OUT / "mini_mock.json").write_text(json.dumps(mock, indent=2) + "\n")


if __name__ == "__main__":
    main()
