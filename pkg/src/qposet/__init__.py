# Quantum partial order module
