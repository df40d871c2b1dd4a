import numpy as np
from rampwf.prediction_types.base import BasePrediction


class BaseRunOutcomes(BasePrediction):
    """One row per instance, one column per entry of ``columns``; a NaN row is an instance not run."""

    def valid_indexes(self):
        return ~np.isnan(self.y_pred[:, self.columns.index("solvable")])

    def check_y_pred_dimensions(self):
        if self.y_pred.ndim != 2 or self.y_pred.shape[1] != len(self.columns):
            raise ValueError(
                f"y_pred should be a matrix with {len(self.columns)} columns {self.columns}, "
                f"shape {self.y_pred.shape} found")

    @classmethod
    def combine(cls, predictions_list, index_list=None):
        """Combine predictions in predictions_list[index_list] by their nan-mean.

        Parameters
        ----------
        predictions_list : list of instances of Base
            Each element of the list is an instance of Base with the
            same length and type.
        index_list : None | list of integers
            The subset of predictions to be combined. If None, the full set is
            combined.
        Returns
        -------
        combined_predictions : instance of cls
            A predictions instance containing the combined predictions.
        """
        if index_list is None:  # we combine the full list
            index_list = range(len(predictions_list))
        y_comb_list = np.array([predictions_list[i].y_pred for i in index_list])
        # entries NaN in every prediction stay NaN
        valid = ~np.all(np.isnan(y_comb_list), axis=0)
        y_comb = np.full(y_comb_list.shape[1:], np.nan)
        y_comb[valid] = np.nanmean(y_comb_list[:, valid], axis=0)
        return cls(y_pred=y_comb)


def _run_outcomes_init(self, y_pred=None, y_true=None, n_samples=None, fold_is=None):
    """Initialize an outcome prediction type.
    The input is either y_pred, or y_true, or n_samples.
    Parameters
    ----------
    y_pred : a matrix of outcomes, as returned by the workflow
    y_true : tuple of Path elements, the instance files
        there is no ground truth outcome, so this gives an empty (NaN) matrix
    n_samples : int
        to initialize an empty container, for the combined predictions
    fold_is : a list of integers
        either the training indices, validation indices, or None when we
        use the (full) test data.
    """
    assert y_pred is not None or y_true is not None or n_samples is not None
    if fold_is is None:
        fold_is = slice(None, None, None)
    if y_pred is not None:
        self.y_pred = np.array(y_pred, dtype=float).reshape(-1, len(self.columns))[fold_is]
    else:
        n = len(y_true) if y_true is not None else n_samples
        self.y_pred = np.full((n, len(self.columns)), np.nan)[fold_is]
    self.check_y_pred_dimensions()


def make_run_outcomes(columns):
    """Creates a prediction type for the outcomes of distributed runs
        Parameters:
            columns: names of the outcome columns, must contain "solvable"

        Returns:
            Predictions: A prediction type holding the outcome matrix.
        """
    columns = list(columns)
    assert "solvable" in columns
    Predictions = type(
        'RunOutcomes',
        (BaseRunOutcomes,),
        {'columns': columns,
         '__init__': _run_outcomes_init,
         })
    return Predictions
