import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOG_LEVEL = os.getenv('BETHE_FLOW_LOG_LEVEL', 'WARNING').upper()

# Brute-force oracle refuses global spaces larger than this
ORACLE_MAX_STATES = int(os.getenv('BETHE_FLOW_ORACLE_MAX_STATES', str(2 ** 24)))

# Singular values below RANK_TOLERANCE * max are treated as zero
RANK_TOLERANCE = float(os.getenv('BETHE_FLOW_RANK_TOLERANCE', '1e-10'))

DEFAULT_SEED = int(os.getenv('BETHE_FLOW_DEFAULT_SEED', '0'))

MODEL_FORMAT = "bethe-flow/1"
