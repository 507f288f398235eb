# Módulo de core (modelo y cálculos del detector)
