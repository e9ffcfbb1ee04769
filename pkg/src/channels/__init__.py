# Quantum channel module
