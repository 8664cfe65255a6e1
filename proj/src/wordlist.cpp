// Fixed vocabulary for the synthetic corpus generator. Changing these lists
// changes every generated corpus.

#include <array>
#include <span>
#include <string_view>

#include "acrotag/corpus.hpp"

namespace acrotag {

namespace {

constexpr std::string_view kContentWords[] = {
    "absolute",     "abstract",    "accelerated",  "acoustic",     "active",
    "adaptive",     "additive",    "adversarial",  "affine",       "aggregated",
    "algebraic",    "analysis",    "approximate",  "architecture", "attention",
    "augmented",    "automatic",   "average",      "backward",     "balanced",
    "batch",        "bayesian",    "belief",       "bidirectional", "binary",
    "boosting",     "boundary",    "bounded",      "buffer",       "canonical",
    "capsule",      "cascade",     "causal",       "channel",      "classifier",
    "clustering",   "coding",      "coherent",     "compressed",   "conditional",
    "consistency",  "constrained", "context",      "contrastive",  "control",
    "convex",       "convolutional", "correlation", "covariance",  "cross",
    "decision",     "decoder",     "deep",         "dense",        "density",
    "dependency",   "descent",     "detection",    "deterministic", "differential",
    "diffusion",    "dimensional", "discrete",     "discriminant", "distance",
    "distributed",  "dynamic",     "efficient",    "elastic",      "embedding",
    "empirical",    "encoder",     "energy",       "ensemble",     "entity",
    "entropy",      "error",       "estimation",   "evolutionary", "expected",
    "expectation",  "explicit",    "exponential",  "extraction",   "factor",
    "feature",      "feedback",    "field",        "filter",       "finite",
    "flow",         "forest",      "forward",      "fourier",      "frequency",
    "function",     "fuzzy",       "gated",        "gaussian",     "general",
    "generative",   "genetic",     "geometric",    "global",       "gradient",
    "graph",        "greedy",      "hashing",      "hidden",       "hierarchical",
    "hybrid",       "identification", "image",     "implicit",     "independent",
    "inference",    "information", "integer",      "interaction",  "interval",
    "inverse",      "iterative",   "joint",        "kernel",       "knowledge",
    "label",        "language",    "latent",       "layer",        "learning",
    "likelihood",   "linear",      "local",        "logistic",     "loss",
    "machine",      "manifold",    "margin",       "markov",       "matching",
    "matrix",       "maximum",     "memory",       "message",      "meta",
    "minimum",      "mixture",     "model",        "modular",      "moment",
    "monte",        "multiple",    "mutual",       "natural",      "nearest",
    "network",      "neural",      "noise",        "nonlinear",    "normal",
    "normalized",   "object",      "online",       "operator",     "optimal",
    "optimization", "ordinal",     "orthogonal",   "parallel",     "parameter",
    "partial",      "particle",    "passing",      "pattern",      "policy",
    "pooling",      "posterior",   "prediction",   "principal",    "prior",
    "probabilistic", "process",    "projection",   "propagation",  "quadratic",
    "quantization", "query",       "random",       "ranking",      "recognition",
    "recurrent",    "recursive",   "reduction",    "regression",   "regularized",
    "reinforcement", "relational", "representation", "residual",   "retrieval",
    "reward",       "robust",      "sampling",     "scalable",     "segmentation",
    "selection",    "semantic",    "sequence",     "sequential",   "shared",
    "signal",       "similarity",  "simulation",   "singular",     "sparse",
    "spatial",      "spectral",    "speech",       "squared",      "state",
    "stochastic",   "structured",  "subspace",     "supervised",   "support",
    "symbolic",     "synthesis",   "temporal",     "tensor",       "textual",
    "time",         "topic",       "transfer",     "transform",    "tree",
    "uncertainty",  "uniform",     "unit",         "unsupervised", "update",
    "value",        "variational", "vector",       "visual",       "weighted",
};

// Sentence-framing words that never belong to a long form.
constexpr std::string_view kFrameWords[] = {
    "we",        "propose",   "present",    "introduce", "study",     "describe",
    "the",       "a",         "this",       "that",      "these",     "our",
    "paper",     "work",      "approach",   "results",   "show",      "shows",
    "is",        "are",       "was",        "were",      "be",        "has",
    "have",      "been",      "used",       "using",     "based",     "called",
    "known",     "as",        "which",      "where",     "while",     "when",
    "also",      "further",   "then",       "here",      "recent",    "existing",
    "previous",  "several",   "many",       "most",      "both",      "each",
    "performs",  "improves",  "achieves",   "compared",  "against",   "strong",
    "baselines", "better",    "than",       "other",     "methods",   "tasks",
    "experiments", "demonstrate", "significant", "gains", "across",  "benchmarks",
    "it",        "can",       "only",       "by",        "at",        "first",
};

// Function words allowed inside a long form; acronyms skip them.
constexpr std::string_view kConnectorWords[] = {
    "of", "with", "for", "and", "in", "on", "to", "via",
};

}  // namespace

std::span<const std::string_view> content_words() { return kContentWords; }
std::span<const std::string_view> frame_words() { return kFrameWords; }
std::span<const std::string_view> connector_words() { return kConnectorWords; }

}  // namespace acrotag
