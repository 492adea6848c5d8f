"""xbarsim: binarized DNN inference on partitioned memristive crossbars.

A numpy/scipy library that tiles binarized MLP layers onto differential
crossbar subarrays, solves each tile's parasitic DC network, models the
analog neuron chain (sensing, noise, thresholding) and reproduces
accuracy / power / SNR trends across subarray sizes, memristive
technologies and bitcell types.
"""
from .analysis import SnrResult, SweepSpec, measure_snr, normalize_snr, run_sweep
from .circuit import (NodalSystem, SolverDivergenceError, TileOperator,
                      TileSolution, build_network, build_network_raw,
                      crossbar_power, dense_solve_oracle, dump_netlist,
                      ideal_mvm, solve_dc, solve_direct)
from .config import ConfigError, load_config
from .devices import (BinarizedModel, BitcellType, ConductancePair,
                      FabricConfig, TechnologyProfile, binarize_input,
                      builtin_technologies, technology_by_name,
                      weight_to_conductance)
from .mnist import (Dataset, IdxFormatError, crop_center, load_dataset,
                    load_split, parse_idx_images, parse_idx_labels)
from .neuron import (NeuronConfig, NoiseStream, activate_hidden,
                     readout_output_layer, sense)
from .partition import (PartitionPlan, Tile, format_plan, plan_network,
                        plan_partitions, validate_plan)
from .pipeline import (DeployedNetwork, EvaluationReport, deploy, evaluate,
                       forward_analog, forward_digital, forward_digital_batch,
                       layer_currents)
from .training import (ModelFormatError, TrainSpec, export_model, import_model,
                       load_model, save_model, digital_accuracy, train)

__version__ = "0.1.0"
