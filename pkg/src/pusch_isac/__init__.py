"""Link-level simulator for a bistatic OFDM ISAC uplink.

Coded transport blocks with HARQ, ML delay/Doppler sensing on DMRS or on all
resource elements, Fisher-information bounds and bistatic geometry.
"""

from .bounds import crlb, fisher_matrix, mse_mix, re_sums, rho, throughput_analytic
from .channel import PathParams, SnrSpec, apply_channel, remove_los, synthesize_channel
from .config import CampaignConfig, load_config
from .grid import DmrsConfig, ReSet, SlotConfig, generate_dmrs, map_pusch, qpsk_modulate
from .harq_link import harq_run_tb, mcs_entry, tbs_compute
from .sensing import EstimatorConfig, Scenario, estimate_ml, form_measurement, periodogram

__version__ = "0.1.0"
