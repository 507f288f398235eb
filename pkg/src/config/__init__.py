# Configuración: ajustes numéricos y descripciones de detector
