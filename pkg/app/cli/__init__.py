from .measure import cmd_measure
from .nudge import cmd_nudge
from .oracle_check import cmd_oracle_check
from .regularity import cmd_regularity
from .simulate import cmd_simulate
from .validate import cmd_validate

COMMANDS = (cmd_validate, cmd_simulate, cmd_measure, cmd_nudge, cmd_oracle_check, cmd_regularity)
