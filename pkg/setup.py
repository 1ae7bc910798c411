"""
Setup script para Rectilab
Instala dependencias, prepara directorios y escribe config.ini
"""

import os
import platform
import subprocess
import sys

DEPENDENCIES = [
    "numpy>=1.24.0",
    "scipy>=1.10.0",
    "plyfile>=0.7.4",
    "pytest>=7.0",
]


def check_python_version():
    """Verifica que la versión de Python sea compatible"""
    if sys.version_info < (3, 8):
        print(" Error: Se requiere Python 3.8 o superior")
        print(f"   Versión actual: {sys.version}")
        return False
    print(f" Python {sys.version.split()[0]} detectado ({platform.system()})")
    return True


def install_dependencies():
    """Instala las dependencias del proyecto"""
    print("\n Instalando dependencias...")
    for dep in DEPENDENCIES:
        print(f"   Instalando {dep}...")
        try:
            subprocess.check_call([sys.executable, "-m", "pip", "install", dep])
            print(f"    {dep} instalado correctamente")
        except subprocess.CalledProcessError:
            print(f"    Error instalando {dep}")
            return False
    return True


def create_directories():
    """Crea directorios de datos, resultados y registros"""
    print("\n Creando directorios...")
    for directory in ("data", "results", "logs"):
        if not os.path.exists(directory):
            os.makedirs(directory)
            print(f"    Creado directorio: {directory}")
        else:
            print(f"    Directorio ya existe: {directory}")


def create_config_file():
    """Escribe config.ini con los valores por defecto de los escenarios"""
    print("\n️  Creando archivo de configuración...")
    from rectilab_config import CONFIG_FILE, ini_text

    if os.path.exists(CONFIG_FILE):
        print(f"    {CONFIG_FILE} ya existe, se conserva")
        return True
    try:
        with open(CONFIG_FILE, "w", encoding="utf-8") as f:
            f.write(ini_text())
        print(f"    Archivo {CONFIG_FILE} creado")
        return True
    except OSError as e:
        print(f"    Error creando {CONFIG_FILE}: {e}")
        return False


def run_test():
    """Prueba rápida: importaciones, rejilla plana y medida armónica exacta de una bola"""
    print("\n Ejecutando prueba del sistema...")
    try:
        from rectilab_log import set_verbose
        from rectilab_runner import run
        from rectilab_config import builtin_scenario

        set_verbose(False)
        print("    Todos los módulos importados correctamente")
        sc = builtin_scenario("empty").replace(checks=["dyadic-plane", "thin-boundary"])
        report = run(sc)
        set_verbose(True)
        for check_id, outcome in report.statuses().items():
            print(f"    {check_id}: {outcome}")
        if not report.passed:
            return False
        print(" Prueba del sistema completada exitosamente")
        return True
    except Exception as e:
        print(f"    Error en prueba del sistema: {e}")
        return False


def show_usage():
    """Muestra información de uso"""
    print("\n" + "=" * 60)
    print(" ¡Instalación completada!")
    print("=" * 60)
    print("\n Para ejecutar el laboratorio:")
    print("   python rectilab.py list-builtins")
    print("   python rectilab.py run halfspace-acceptance --out results")
    print("   python rectilab.py hm omega --pole 0,0,1 --radius 1")
    print("   python example_usage.py")
    print("\n Pruebas:")
    print("   pytest")
    print("\n Documentación:")
    print("   README.md - Guía del proyecto")
    print("   TECHNICAL_DOCS.md - Detalles numéricos")
    print("\n Configuración:")
    print("   config.ini - Valores por defecto de los escenarios")
    print("\n" + "=" * 60)


def main():
    """Función principal del setup"""
    print(" Rectilab - Rectificabilidad uniforme y medida armónica")
    print("=" * 60)
    if not check_python_version():
        return False
    if not install_dependencies():
        print(" Error instalando dependencias")
        return False
    create_directories()
    if not create_config_file():
        return False
    if run_test():
        show_usage()
        return True
    print(" Error en la prueba del sistema")
    return False


def build_package():
    """Metadatos de empaquetado cuando pip/setuptools invoca este script con un comando"""
    from setuptools import setup

    setup(
        name="rectilab",
        version="0.1.0",
        python_requires=">=3.8",
        py_modules=[
            "rectilab",
            "rectilab_config",
            "rectilab_connectivity",
            "rectilab_dyadic",
            "rectilab_errors",
            "rectilab_functionals",
            "rectilab_geometry",
            "rectilab_harmonic",
            "rectilab_log",
            "rectilab_potential",
            "rectilab_runner",
            "rectilab_whitney",
            "boundary_ply_io",
        ],
        install_requires=[d for d in DEPENDENCIES if not d.startswith("pytest")],
    )


if __name__ == "__main__" and len(sys.argv) > 1:
    build_package()
elif __name__ == "__main__":
    success = main()
    if not success:
        print("\n La instalación no se completó correctamente")
        print("   Revisa los errores anteriores e intenta nuevamente")
        sys.exit(1)
    else:
        print("\n Instalación completada exitosamente")
        sys.exit(0)
