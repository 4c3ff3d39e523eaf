"""
Check suites - importing this package registers every suite's checks
"""
from src.services.workbench.suites import admissibility, cohomology, contractibility, protopology, towers  # noqa: F401
