"""SOC regression toolkit: preprocessing, seven estimators, metrics and a benchmark harness."""
from .data import (Frame, SplitSpec, apply_standardizer, fit_standardizer, generate_synthetic,
                   load_csv, remove_outliers, select_features, split)
from .linear import LassoRegression, LinearRegression, lasso_fit, ols_fit
from .metrics import MetricsReport, score
from .neural import NeuralRegressor
from .selection import grid_search, kfold_indices
from .tree import DecisionTreeRegressor, tree_fit, tree_predict

__version__ = "0.1.0"

__all__ = ["Frame", "SplitSpec", "apply_standardizer", "fit_standardizer", "generate_synthetic",
           "load_csv", "remove_outliers", "select_features", "split", "LassoRegression",
           "LinearRegression", "lasso_fit", "ols_fit", "MetricsReport", "score",
           "NeuralRegressor", "grid_search", "kfold_indices", "DecisionTreeRegressor",
           "tree_fit", "tree_predict"]
