"""Integrators for the Markov and non-Markovian unravellings."""

from .memory import MemoryAccumulator, kernel_integral_exact, memory_update
from .riccati import (F_GUARD, FCoefficient, FSolution, critical_time, solve_F,
                      solve_F_or_raise, subcritical_asymptote)
from .steppers import (EULER, HEUN, CutModel, OAnsatz, StepScheme, dark_state,
                       markov_linear_step, markov_qsd_step,
                       nmqsd_dissipative_step, nmqsd_linear_step,
                       nmqsd_measurement_step, two_channel_cut_step)
from .models import (DissipativeModel, MarkovModel, MeasurementModel, Model,
                     TwoChannelModel)
