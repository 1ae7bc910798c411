"""
Rectilab Log - Mensajes de estado en consola
"""

VERBOSE = True


def set_verbose(flag: bool) -> None:
    """Activa o silencia los mensajes de estado"""
    global VERBOSE
    VERBOSE = bool(flag)


def status(message: str) -> None:
    """Imprime una línea de estado si el modo verboso está activo"""
    if VERBOSE:
        print(f" {message}")
