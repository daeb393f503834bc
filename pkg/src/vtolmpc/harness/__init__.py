from .metrics import RmsReport, compute_rms
from .tasks import TaskResult, TaskSpec, default_task, load_config, run_task, task_from_overrides, write_outputs
from .trajectory import ReferenceTrajectory, Waypoint, generate_trajectory, square_waypoints
