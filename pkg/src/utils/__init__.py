# Utilidades: logging, validación del punto de operación y unidades
